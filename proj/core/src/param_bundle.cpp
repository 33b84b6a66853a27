// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/param_bundle.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "felab/errors.hpp"
#include "felab/waveform_io.hpp"

namespace felab {
namespace {

constexpr char kMagic[8] = {'F', 'E', 'L', 'A', 'B', 'P', 'R', 'M'};

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw DataError("parameter bundle truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_string(std::ostream& os, std::string_view s) {
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, std::size_t len) {
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("parameter bundle truncated");
  return s;
}

void put_shape(std::ostream& os, const std::vector<std::size_t>& shape) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_le<std::uint64_t>(os, d);
}

std::vector<std::size_t> get_shape(std::istream& is) {
  const auto rank = get_le<std::uint32_t>(is);
  if (rank > 8) throw DataError("parameter bundle: implausible tensor rank");
  std::vector<std::size_t> shape(rank);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    count *= d;
    if (d > (std::uint64_t{1} << 32) || count > (std::uint64_t{1} << 32))
      throw DataError("parameter bundle: implausible tensor size");
  }
  return shape;
}

void put_real(std::ostream& os, std::string_view name, const Tensor<double>& t) {
  put_string(os, name);
  put_le<std::uint8_t>(os, 0);
  put_shape(os, t.shape());
  for (double v : t.data()) write_f64_le(os, v);
}

void put_complex(std::ostream& os, std::string_view name, const Tensor<Complex>& t) {
  put_string(os, name);
  put_le<std::uint8_t>(os, 1);
  put_shape(os, t.shape());
  write_complex_le(os, t.data());
}

nlohmann::json fiber_json(const FiberParams& f) {
  return {{"dispersion_ps_nm_km", f.dispersion},
          {"gamma_per_w_km", f.gamma},
          {"alpha_db_per_km", f.alpha_db},
          {"length_km", f.length_km},
          {"ref_wavelength_nm", f.ref_wavelength_nm}};
}

FiberParams fiber_parse(const nlohmann::json& j, FiberParams f) {
  f.dispersion = j.value("dispersion_ps_nm_km", f.dispersion);
  f.gamma = j.value("gamma_per_w_km", f.gamma);
  f.alpha_db = j.value("alpha_db_per_km", f.alpha_db);
  f.length_km = j.value("length_km", f.length_km);
  f.ref_wavelength_nm = j.value("ref_wavelength_nm", f.ref_wavelength_nm);
  return f;
}

nlohmann::json parse_or_throw(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string fiber_to_json(const FiberParams& fiber) { return fiber_json(fiber).dump(); }

FiberParams fiber_from_json(std::string_view text, const FiberParams& defaults) {
  try {
    return fiber_parse(parse_or_throw(text), defaults);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fiber parameters: ") + e.what());
  }
}

std::string spec_to_json(const EqualizerSpec& s) {
  nlohmann::ordered_json j;
  j["n_ch"] = s.n_ch;
  j["steps_per_span"] = s.steps_per_span;
  j["spans"] = s.spans;
  j["s_spm"] = s.s_spm;
  j["s_xpm"] = s.s_xpm;
  j["s_cd"] = s.s_cd;
  j["delta_cd_ps_nm"] = s.delta_cd;
  j["n_fft"] = s.n_fft;
  j["overlap_m"] = s.overlap_m;
  j["sps"] = s.sps;
  j["baud_rate"] = s.baud_rate;
  j["spacing_hz"] = s.spacing;
  j["band_hz"] = s.band_hz;
  j["placement"] = std::string(to_string(s.placement));
  j["fiber"] = fiber_json(s.fiber);
  return j.dump();
}

EqualizerSpec spec_from_json(std::string_view text, const EqualizerSpec& defaults) {
  const auto j = parse_or_throw(text);
  EqualizerSpec s = defaults;
  try {
    s.n_ch = j.value("n_ch", s.n_ch);
    s.steps_per_span = j.value("steps_per_span", s.steps_per_span);
    s.spans = j.value("spans", s.spans);
    s.s_spm = j.value("s_spm", s.s_spm);
    s.s_xpm = j.value("s_xpm", s.s_xpm);
    s.s_cd = j.value("s_cd", s.s_cd);
    s.delta_cd = j.value("delta_cd_ps_nm", s.delta_cd);
    s.n_fft = j.value("n_fft", s.n_fft);
    s.overlap_m = j.value("overlap_m", s.overlap_m);
    s.sps = j.value("sps", s.sps);
    s.baud_rate = j.value("baud_rate", s.baud_rate);
    s.spacing = j.value("spacing_hz", s.spacing);
    s.band_hz = j.value("band_hz", s.band_hz);
    if (j.contains("placement")) s.placement = placement_from_string(j.at("placement").get<std::string>());
    if (j.contains("fiber")) s.fiber = fiber_parse(j.at("fiber"), s.fiber);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("equalizer spec: ") + e.what());
  }
  return s;
}

void write_bundle(const std::filesystem::path& path, const EqualizerSpec& spec, const EqualizerParams& params) {
  params.check_shapes(spec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write parameter bundle " + path.string());
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(os, kBundleVersion);
  const std::string echo = spec_to_json(spec);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(echo.size()));
  os.write(echo.data(), static_cast<std::streamsize>(echo.size()));
  put_le<std::uint32_t>(os, 4);
  put_real(os, "alpha", params.alpha);
  put_real(os, "beta", params.beta);
  put_complex(os, "h_in", params.h_in);
  put_complex(os, "h_out", params.h_out);
  if (!os) throw DataError("write failed for " + path.string());
}

ParamBundle read_bundle(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open parameter bundle " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError(path.string() + " is not a felab parameter bundle");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kBundleVersion)
    throw DataError("unsupported parameter bundle version " + std::to_string(version));
  const auto echo_len = get_le<std::uint32_t>(is);
  ParamBundle bundle;
  bundle.spec = spec_from_json(get_string(is, echo_len));
  const auto count = get_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_string(is, get_le<std::uint16_t>(is));
    const auto dtype = get_le<std::uint8_t>(is);
    const auto shape = get_shape(is);
    if (dtype == 0) {
      Tensor<double> t(shape);
      for (auto& v : t.data()) v = read_f64_le(is);
      if (name == "alpha") bundle.params.alpha = std::move(t);
      else if (name == "beta") bundle.params.beta = std::move(t);
      else throw DataError("parameter bundle: unexpected real tensor '" + name + "'");
    } else if (dtype == 1) {
      Tensor<Complex> t(shape);
      read_complex_le(is, t.data());
      if (name == "h_in") bundle.params.h_in = std::move(t);
      else if (name == "h_out") bundle.params.h_out = std::move(t);
      else throw DataError("parameter bundle: unexpected complex tensor '" + name + "'");
    } else {
      throw DataError("parameter bundle: unknown dtype in tensor '" + name + "'");
    }
  }
  bundle.params.check_shapes(bundle.spec);
  return bundle;
}

}  // namespace felab
