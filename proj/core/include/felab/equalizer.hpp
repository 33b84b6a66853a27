// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// MIMO learned inverse-Volterra equalizer with field-enhanced nonlinear
// stages. Per overlap-save block and channel n:
//
//   U_n = X_n H_full,n + sum_k H_post,k,n FFT( h_out,k,n * sigma_k,n )
//   sigma_k,n = -j gamma L (u_n (alpha * p_n) + 2 u_n sum_{r!=n} beta_r * p_r)
//   u_n = h_in,k,n * IFFT(X_n H_pre,k,n),   p_r = |u_r|^2
//
// where H_pre,k stops the back-propagation at the k-th nonlinear location
// minus the dispersion delegated to the field FIRs h_in/h_out, and
// H_pre,k H_post,k = H_full.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "felab/channel.hpp"
#include "felab/signal.hpp"
#include "felab/tensor.hpp"

namespace felab {

enum class StepPlacement {
  midpoint,        // centre of each step segment
  power_centroid,  // power-weighted centre of each step segment
};

std::string_view to_string(StepPlacement p);
StepPlacement placement_from_string(std::string_view name);

struct EqualizerSpec {
  int n_ch = 3;
  int steps_per_span = 1;
  int spans = 6;
  int s_spm = 7;        // 2l+1
  int s_xpm = 31;       // 2m+1
  int s_cd = 3;         // field FIR taps, 0 disables the field filters
  double delta_cd = 4.25;  // ps/nm handled by the field FIRs
  int n_fft = 2048;
  int overlap_m = 1024;
  int sps = 2;          // q
  double baud_rate = 32e9;
  double spacing = 40e9;
  /// Half-width of the band where stage responses follow the exact
  /// compensation phase; 0 selects spacing/2 (0.625 baud for one channel).
  double band_hz = 0.0;
  FiberParams fiber;
  StepPlacement placement = StepPlacement::midpoint;

  int total_steps() const { return steps_per_span * spans; }
  double sample_rate() const { return sps * baud_rate; }
  /// Samples kept per block, N_FFT - M + 1.
  std::size_t valid_length() const { return static_cast<std::size_t>(n_fft - overlap_m + 1); }
  /// Leading samples discarded per block; M - 1 - head trail the valid region.
  std::size_t head_discard() const { return static_cast<std::size_t>((overlap_m - 1) / 2); }
  double step_length_km() const { return fiber.length_km / steps_per_span; }
  double delegated_length_km() const { return fiber.dispersion_length_km(delta_cd); }
  /// Nonlinear length used to scale the activations.
  double nonlinear_length_km() const { return fiber.effective_length_km() / steps_per_span; }
  /// Fiber distance, measured back from the receiver, of nonlinear step k.
  double step_distance_km(int k) const;
  double total_length_km() const { return spans * fiber.length_km; }
  /// Integer part, in samples, of channel ch's full-link walk-off delay. The
  /// full and post stages omit it so the linear path stays centred in each
  /// block; output sample t of channel ch then belongs to position t + shift.
  long alignment_shift(int ch) const;
  /// Resolved band_hz, capped at the Nyquist frequency.
  double compensation_band() const;

  void validate() const;
};

/// Trainable tensors.
///   alpha [N_s][n_ch][s_spm]            real
///   beta  [N_s][n_ch][n_ch-1][s_xpm]    real, neighbour r' skips r == n
///   h_in, h_out [N_s][n_ch][s_cd]       complex
struct EqualizerParams {
  Tensor<double> alpha;
  Tensor<double> beta;
  Tensor<Complex> h_in;
  Tensor<Complex> h_out;

  /// Zero-filled tensors shaped for the spec.
  static EqualizerParams zeros(const EqualizerSpec& spec);
  /// Throws DataError naming both shapes on mismatch.
  void check_shapes(const EqualizerSpec& spec) const;
  bool all_finite() const;

  friend bool operator==(const EqualizerParams&, const EqualizerParams&) = default;
};

/// Index of neighbour r in the beta slice of channel n.
inline std::size_t neighbor_slot(std::size_t n, std::size_t r) { return r < n ? r : r - 1; }

struct LinearStageBank {
  std::size_t n_fft = 0;
  std::vector<long> shift;                       // [n_ch], alignment_shift()
  std::vector<std::vector<ComplexVector>> pre;   // [N_s][n_ch]
  std::vector<std::vector<ComplexVector>> post;  // [N_s][n_ch]
  std::vector<ComplexVector> full;               // [n_ch]
};

/// Back-propagation response exp(-j (beta2/2 w^2 + beta2 W_n w) z) for a
/// channel at offset_hz, compensating `distance_km` of fiber.
ComplexVector cd_compensation_response(const EqualizerSpec& spec, double offset_hz, double distance_km,
                                       std::size_t n);

/// Stage response used by the equalizer. Inside |f| <= compensation_band()
/// it equals cd_compensation_response times exp(+j w advance / fs). Outside,
/// the phase bridges smoothly (C-infinity) around the Nyquist frequency so the
/// periodic response has a compact impulse response. Linear in distance_km:
/// products of responses telescope exactly.
ComplexVector stage_response(const EqualizerSpec& spec, double offset_hz, double distance_km, std::size_t n,
                             long advance_samples = 0);

/// pre[k] compensates d_k - z_delta, full the whole link minus the alignment
/// shift, post[k] = full conj(pre[k]).
LinearStageBank build_linear_stages(const EqualizerSpec& spec);

/// p_f[t] = sum_{c=-l..l} taps[c+l] p[t+c], zero outside the block.
std::vector<double> filter_power(std::span<const double> power, std::span<const double> taps);

ComplexVector spm_activation(std::span<const Complex> y, std::span<const double> taps, double gamma,
                             double nonlinear_length);

ComplexVector xpm_activation(std::span<const Complex> y, const std::vector<std::span<const Complex>>& neighbors,
                             const std::vector<std::span<const double>>& taps, double gamma,
                             double nonlinear_length);

/// out[t] = sum_c taps[c+h] y[t-c], centred, same length, zero padded.
/// Empty taps is the identity.
ComplexVector fir_field_filter(std::span<const Complex> y, std::span<const Complex> taps);

/// Branch k in the frequency domain: H_post,k FFT(h_out * sigma) per channel.
std::vector<ComplexVector> branch_forward(const std::vector<ComplexVector>& input_spectra, int k,
                                          const EqualizerParams& params, const EqualizerSpec& spec,
                                          const LinearStageBank& stages);

/// One overlap-save block; returns valid_length() samples per channel.
std::vector<ComplexVector> equalize_block(const std::vector<std::span<const Complex>>& block,
                                          const EqualizerParams& params, const EqualizerSpec& spec,
                                          const LinearStageBank& stages);

struct StreamResult {
  WdmEnsemble output;
  /// Input samples dropped at the start and the end of the stream.
  std::size_t leading_trim = 0;
  std::size_t trailing_trim = 0;
};

/// Overlap-save over a whole stream. Output sample i corresponds to input
/// sample i + leading_trim; the stream loses overlap_m - 1 samples in total.
/// Channels with a nonzero alignment shift carry |shift| extra transient
/// samples at one end.
StreamResult equalize_stream(const WdmEnsemble& rx, const EqualizerParams& params, const EqualizerSpec& spec);
StreamResult equalize_stream(const WdmEnsemble& rx, const EqualizerParams& params, const EqualizerSpec& spec,
                             const LinearStageBank& stages);

}  // namespace felab
