// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Complex-baseband signal primitives: constellations, root-raised-cosine
// shaping, FFT resampling and WDM channel multiplexing.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "felab/fft.hpp"

namespace felab {

/// Uniformly sampled complex field. Samples are in sqrt(W).
struct SignalGrid {
  ComplexVector samples;
  double sample_rate = 0.0;    // Hz
  double center_offset = 0.0;  // Hz, relative to the ensemble center

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// mean(|x|^2), zero for an empty grid.
  double power() const;
};

enum class Modulation { qam64, qam16, qpsk };

int bits_per_symbol(Modulation m);
int constellation_size(Modulation m);
std::string_view to_string(Modulation m);
Modulation modulation_from_string(std::string_view name);

/// Unit average energy Gray-coded square constellation. Entry i is the point
/// labelled by the bit pattern of i (MSB first); the first half of the bits
/// select the in-phase level, the second half the quadrature level.
const ComplexVector& constellation(Modulation m);

struct SymbolFrame {
  ComplexVector symbols;
  Modulation modulation = Modulation::qam64;
  double baud_rate = 0.0;
};

/// Bits are 0/1 bytes, MSB first within each symbol.
SymbolFrame map_symbols(std::span<const std::uint8_t> bits, Modulation m, double baud_rate);

/// Hard decision to the nearest constellation point, returned as bits.
std::vector<std::uint8_t> demap_symbols(std::span<const Complex> symbols, Modulation m);

/// Index of the nearest constellation point for each symbol.
std::vector<int> slice_symbols(std::span<const Complex> symbols, Modulation m);

/// Raised-cosine spectrum, one at DC, folded alias sum equal to one.
double raised_cosine_spectrum(double f, double baud_rate, double rolloff);

/// Root-raised-cosine frequency response on an n-point FFT grid, scaled by
/// sqrt(sps) so that shaping followed by matched filtering and decimation is
/// an identity on the symbols.
std::vector<double> rrc_response(std::size_t n, double sample_rate, double baud_rate, double rolloff);

/// Circular impulse response of rrc_response (n taps, tap 0 at t = 0).
ComplexVector rrc_taps(std::size_t n, double sample_rate, double baud_rate, double rolloff);

/// Closed-form root-raised-cosine pulse p(t) with the same scaling as
/// rrc_response, t in seconds.
double rrc_pulse(double t, double baud_rate, double rolloff, int sps);

/// Shapes a symbol frame into a waveform at sps samples per symbol. The
/// frame is treated as one period of a periodic sequence; symbol i sits at
/// sample i * sps.
SignalGrid shape_pulses(const SymbolFrame& frame, int sps, double rolloff);

/// Applies the (real, symmetric) RRC matched filter; zero group delay so
/// symbol centres stay on sample indices i * sps.
SignalGrid matched_filter(const SignalGrid& sig, double baud_rate, double rolloff);

ComplexVector decimate(std::span<const Complex> samples, std::size_t factor, std::size_t offset = 0);

/// FFT zero-padding / truncation to a new sample rate. The new length must be
/// an integer.
SignalGrid resample(const SignalGrid& sig, double target_rate);

/// Frequency offset of channel index i in an ensemble of n_ch channels.
double channel_offset(std::size_t index, std::size_t n_ch, double spacing);

struct WdmEnsemble {
  std::vector<SignalGrid> channels;
  double spacing = 0.0;    // Hz
  double baud_rate = 0.0;  // Hz

  std::size_t size() const { return channels.size(); }
  /// Checks offsets, shared sample rate and shared length.
  void validate() const;
};

struct FrequencyPlan {
  std::size_t n_ch = 0;
  double spacing = 0.0;
  double baud_rate = 0.0;
  /// Width of the brick-wall band select; defaults to the spacing when <= 0.
  double band_width = 0.0;
};

/// Minimum wideband rate accepted by mux for the given ensemble geometry.
double required_mux_rate(std::size_t n_ch, double spacing, double baud_rate, double rolloff);

/// Upsamples and frequency-shifts every channel onto one wideband grid.
SignalGrid mux(const WdmEnsemble& ensemble, double target_rate, double rolloff);

/// Shifts each planned channel to baseband, band-selects it in the frequency
/// domain and resamples it to out_sps samples per symbol.
WdmEnsemble demux(const SignalGrid& wideband, const FrequencyPlan& plan, int out_sps);

}  // namespace felab
