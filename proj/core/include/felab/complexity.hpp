// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Signal-path real multiplications per transmitted symbol (RM/sym).

#pragma once

#include <optional>
#include <string>

#include "felab/equalizer.hpp"

namespace felab {

struct ComplexityConfig {
  std::string label;
  int n_ch = 9;
  int steps_per_span = 2;
  int spans = 6;
  int s_spm = 7;
  int s_xpm = 31;
  int s_cd = 3;  // 0 for the plain (power-filter only) model
  int n_fft = 2048;
  int overlap_m = 1024;
  int q = 2;
  /// Externally reported total for the same configuration, if any.
  std::optional<double> reported_total;

  int total_steps() const { return steps_per_span * spans; }
  static ComplexityConfig from_spec(const EqualizerSpec& spec, std::string label = {});
};

struct ComplexityReport {
  ComplexityConfig config;
  double fd_rm_per_sym = 0.0;
  double td_rm_per_sym = 0.0;
  double total = 0.0;
};

/// 4 N log2 N for a radix-2 forward/inverse pair; N must be a power of two.
double fft_cost(long n_fft);

/// [q (1 + N_s) C_FFT + 4 q N_FFT (2 N_s + 1)] / (N_FFT - M + 1)
double fd_cost(const ComplexityConfig& c);

/// q N_ch N_s [0.5 (S_SPM + 1) + (N_ch - 1) S_XPM + 8 S_CD + 4]
double td_cost(const ComplexityConfig& c);

ComplexityReport complexity(const ComplexityConfig& c);

struct ComplexityComparison {
  ComplexityReport fe;
  ComplexityReport plain;
  double ratio = 0.0;  // fe.total / plain.total
};

ComplexityComparison compare(const ComplexityConfig& fe, const ComplexityConfig& plain);

}  // namespace felab
