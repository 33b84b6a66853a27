// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Waveform persistence: `<base>.bin` holds little-endian interleaved float64
// (re, im) pairs, `<base>.json` is the sidecar header.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "felab/signal.hpp"

namespace felab {

struct WaveformHeader {
  double sample_rate = 0.0;
  double center_offset = 0.0;
  double baud_rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  /// "waveform" or "symbols"; symbol files also carry the modulation name.
  std::string kind = "waveform";
  std::string modulation;
};

void write_waveform(const std::filesystem::path& base, const SignalGrid& grid, WaveformHeader header);
SignalGrid read_waveform(const std::filesystem::path& base, WaveformHeader* header = nullptr);

void write_symbols(const std::filesystem::path& base, const SymbolFrame& frame, std::uint64_t seed);
SymbolFrame read_symbols(const std::filesystem::path& base, WaveformHeader* header = nullptr);

/// Raw sample payload helpers, exposed for the parameter bundle writer.
void write_complex_le(std::ostream& os, std::span<const Complex> values);
void read_complex_le(std::istream& is, std::span<Complex> values);
void write_f64_le(std::ostream& os, double value);
double read_f64_le(std::istream& is);

}  // namespace felab
