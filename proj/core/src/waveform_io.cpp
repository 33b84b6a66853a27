// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/waveform_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "felab/errors.hpp"

namespace felab {
namespace {

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  return std::filesystem::path(base.string() + suffix);
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

void write_bits(std::ostream& os, double value) {
  const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(value));
  os.write(reinterpret_cast<const char*>(&le), sizeof le);
}

double read_bits(std::istream& is) {
  std::uint64_t le = 0;
  is.read(reinterpret_cast<char*>(&le), sizeof le);
  if (!is) throw DataError("unexpected end of binary payload");
  return std::bit_cast<double>(to_le(le));
}

void write_header(const std::filesystem::path& path, const WaveformHeader& h) {
  nlohmann::ordered_json j;
  j["format"] = "felab-waveform";
  j["version"] = 1;
  j["kind"] = h.kind;
  j["sample_rate"] = h.sample_rate;
  j["center_offset"] = h.center_offset;
  j["baud_rate"] = h.baud_rate;
  j["seed"] = h.seed;
  j["n_samples"] = h.n_samples;
  if (!h.modulation.empty()) j["modulation"] = h.modulation;
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

WaveformHeader read_header(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open waveform header " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed waveform header " + path.string() + ": " + e.what());
  }
  WaveformHeader h;
  try {
    h.kind = j.value("kind", "waveform");
    h.sample_rate = j.at("sample_rate").get<double>();
    h.center_offset = j.value("center_offset", 0.0);
    h.baud_rate = j.value("baud_rate", 0.0);
    h.seed = j.value("seed", std::uint64_t{0});
    h.n_samples = j.at("n_samples").get<std::size_t>();
    h.modulation = j.value("modulation", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError("incomplete waveform header " + path.string() + ": " + e.what());
  }
  return h;
}

void write_payload(const std::filesystem::path& path, std::span<const Complex> values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  write_complex_le(os, values);
  if (!os) throw DataError("write failed for " + path.string());
}

ComplexVector read_payload(const std::filesystem::path& path, std::size_t n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open waveform payload " + path.string());
  ComplexVector values(n);
  read_complex_le(is, values);
  if (is.peek() != std::ifstream::traits_type::eof())
    throw DataError("payload " + path.string() + " is longer than its header declares");
  return values;
}

}  // namespace

void write_f64_le(std::ostream& os, double value) { write_bits(os, value); }
double read_f64_le(std::istream& is) { return read_bits(is); }

void write_complex_le(std::ostream& os, std::span<const Complex> values) {
  for (const auto& v : values) {
    write_bits(os, v.real());
    write_bits(os, v.imag());
  }
}

void read_complex_le(std::istream& is, std::span<Complex> values) {
  for (auto& v : values) {
    const double re = read_bits(is);
    const double im = read_bits(is);
    v = Complex(re, im);
  }
}

void write_waveform(const std::filesystem::path& base, const SignalGrid& grid, WaveformHeader header) {
  header.kind = "waveform";
  header.sample_rate = grid.sample_rate;
  header.center_offset = grid.center_offset;
  header.n_samples = grid.size();
  write_payload(with_suffix(base, ".bin"), grid.samples);
  write_header(with_suffix(base, ".json"), header);
}

SignalGrid read_waveform(const std::filesystem::path& base, WaveformHeader* header) {
  const WaveformHeader h = read_header(with_suffix(base, ".json"));
  SignalGrid grid;
  grid.sample_rate = h.sample_rate;
  grid.center_offset = h.center_offset;
  grid.samples = read_payload(with_suffix(base, ".bin"), h.n_samples);
  if (header) *header = h;
  return grid;
}

void write_symbols(const std::filesystem::path& base, const SymbolFrame& frame, std::uint64_t seed) {
  WaveformHeader h;
  h.kind = "symbols";
  h.sample_rate = frame.baud_rate;
  h.baud_rate = frame.baud_rate;
  h.seed = seed;
  h.n_samples = frame.symbols.size();
  h.modulation = std::string(to_string(frame.modulation));
  write_payload(with_suffix(base, ".bin"), frame.symbols);
  write_header(with_suffix(base, ".json"), h);
}

SymbolFrame read_symbols(const std::filesystem::path& base, WaveformHeader* header) {
  const WaveformHeader h = read_header(with_suffix(base, ".json"));
  if (h.kind != "symbols") throw DataError(base.string() + " is not a symbol file");
  SymbolFrame frame;
  frame.baud_rate = h.baud_rate;
  frame.modulation = modulation_from_string(h.modulation);
  frame.symbols = read_payload(with_suffix(base, ".bin"), h.n_samples);
  if (header) *header = h;
  return frame;
}

}  // namespace felab
