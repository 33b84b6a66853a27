// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "felab/signal.hpp"

namespace felab {

enum class SnrMetric { ber, evm };

std::string_view to_string(SnrMetric m);
SnrMetric snr_metric_from_string(std::string_view name);

struct ChannelReport {
  std::size_t channel = 0;
  double ber = 0.0;
  double snr_eff_db = 0.0;  // BER-derived; +inf when no bit errors were seen
  double evm_db = 0.0;      // EVM in dB, i.e. -evm_snr_db
  double evm_snr_db = 0.0;
  std::size_t symbol_count = 0;

  double snr_db(SnrMetric metric) const { return metric == SnrMetric::ber ? snr_eff_db : evm_snr_db; }
};

/// Complex scale a minimising |recovered - a reference|^2.
Complex fit_scale(std::span<const Complex> recovered, std::span<const Complex> reference);

/// recovered / fit_scale(recovered, reference).
ComplexVector normalize_to_reference(std::span<const Complex> recovered, std::span<const Complex> reference);

/// Fraction of bit errors after hard decisions on both sequences.
double count_ber(std::span<const Complex> recovered, std::span<const Complex> reference, Modulation m);

/// Gray-coded square QAM bit error probability on AWGN at Es/N0 = snr
/// (linear). Exact per-bit-position sum over the erfc terms.
double qam_ber(double snr_linear, Modulation m);

/// Inverts qam_ber by bisection on the dB scale (to 1e-4 dB or better).
double ber_to_snr(double ber, Modulation m);

/// -10 log10(mean|r/a - s|^2 / mean|s|^2); +inf for an exact match.
double evm_snr(std::span<const Complex> recovered, std::span<const Complex> reference);

/// Normalises, counts BER and computes both SNR figures.
ChannelReport make_report(std::size_t channel, std::span<const Complex> recovered,
                          std::span<const Complex> reference, Modulation m);

double mean_snr_db(const std::vector<ChannelReport>& reports, SnrMetric metric);

}  // namespace felab
