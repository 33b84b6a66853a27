// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "felab/errors.hpp"

namespace felab {
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t checked_integer(double value, const char* what) {
  const double r = std::round(value);
  if (r < 0 || std::abs(value - r) > 1e-6 * std::max(1.0, std::abs(value))) {
    std::ostringstream os;
    os << what << " must be a non-negative integer, got " << value;
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(r);
}

long signed_bin(std::size_t k, std::size_t n) {
  return (2 * k < n) ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

std::size_t wrap_bin(long k, std::size_t n) {
  const long nn = static_cast<long>(n);
  return static_cast<std::size_t>(((k % nn) + nn) % nn);
}

// Frequency offsets must land on the FFT grid of the frame.
long bin_shift(double offset, double duration) {
  const auto shift = static_cast<long>(checked_integer(std::abs(offset) * duration, "channel offset in bins"));
  return offset < 0 ? -shift : shift;
}

unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }

unsigned gray_decode(unsigned g) {
  unsigned v = g;
  for (unsigned shift = g >> 1; shift != 0; shift >>= 1) v ^= shift;
  return v;
}

ComplexVector build_constellation(Modulation m) {
  const int bits = bits_per_symbol(m);
  const int half = bits / 2;
  const unsigned levels = 1u << half;
  const double scale = 1.0 / std::sqrt(2.0 * (std::pow(2.0, bits) - 1.0) / 3.0);
  ComplexVector points(std::size_t{1} << bits);
  for (unsigned label = 0; label < points.size(); ++label) {
    const unsigned i_label = label >> half;
    const unsigned q_label = label & (levels - 1);
    // Level index 0 is the most positive amplitude.
    const double i_amp = static_cast<double>(levels - 1) - 2.0 * gray_decode(i_label);
    const double q_amp = static_cast<double>(levels - 1) - 2.0 * gray_decode(q_label);
    points[label] = Complex(i_amp, q_amp) * scale;
  }
  return points;
}

}  // namespace

double SignalGrid::power() const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += std::norm(s);
  return acc / static_cast<double>(samples.size());
}

int bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::qam64: return 6;
    case Modulation::qam16: return 4;
    case Modulation::qpsk: return 2;
  }
  return 0;
}

int constellation_size(Modulation m) { return 1 << bits_per_symbol(m); }

std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::qam64: return "QAM64";
    case Modulation::qam16: return "QAM16";
    case Modulation::qpsk: return "QPSK";
  }
  return "?";
}

Modulation modulation_from_string(std::string_view name) {
  if (name == "QAM64" || name == "64QAM") return Modulation::qam64;
  if (name == "QAM16" || name == "16QAM") return Modulation::qam16;
  if (name == "QPSK") return Modulation::qpsk;
  throw ConfigError("unknown modulation '" + std::string(name) + "'");
}

const ComplexVector& constellation(Modulation m) {
  static const ComplexVector qam64 = build_constellation(Modulation::qam64);
  static const ComplexVector qam16 = build_constellation(Modulation::qam16);
  static const ComplexVector qpsk = build_constellation(Modulation::qpsk);
  switch (m) {
    case Modulation::qam64: return qam64;
    case Modulation::qam16: return qam16;
    case Modulation::qpsk: break;
  }
  return qpsk;
}

SymbolFrame map_symbols(std::span<const std::uint8_t> bits, Modulation m, double baud_rate) {
  const auto bps = static_cast<std::size_t>(bits_per_symbol(m));
  if (bits.size() % bps != 0) {
    std::ostringstream os;
    os << "map_symbols: " << bits.size() << " bits is not a multiple of " << bps
       << " bits per symbol for " << to_string(m);
    throw ConfigError(os.str());
  }
  const auto& points = constellation(m);
  SymbolFrame frame;
  frame.modulation = m;
  frame.baud_rate = baud_rate;
  frame.symbols.resize(bits.size() / bps);
  for (std::size_t i = 0; i < frame.symbols.size(); ++i) {
    unsigned label = 0;
    for (std::size_t b = 0; b < bps; ++b) label = (label << 1) | (bits[i * bps + b] & 1u);
    frame.symbols[i] = points[label];
  }
  return frame;
}

std::vector<int> slice_symbols(std::span<const Complex> symbols, Modulation m) {
  const int bits = bits_per_symbol(m);
  const int half = bits / 2;
  const int levels = 1 << half;
  const double scale = std::sqrt(2.0 * (std::pow(2.0, bits) - 1.0) / 3.0);
  auto level_index = [&](double amp) {
    const double idx = std::round(((levels - 1) - amp * scale) / 2.0);
    return static_cast<unsigned>(std::clamp(idx, 0.0, static_cast<double>(levels - 1)));
  };
  std::vector<int> out(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const unsigned il = gray_encode(level_index(symbols[i].real()));
    const unsigned ql = gray_encode(level_index(symbols[i].imag()));
    out[i] = static_cast<int>((il << half) | ql);
  }
  return out;
}

std::vector<std::uint8_t> demap_symbols(std::span<const Complex> symbols, Modulation m) {
  const auto bps = static_cast<std::size_t>(bits_per_symbol(m));
  const auto labels = slice_symbols(symbols, m);
  std::vector<std::uint8_t> bits(labels.size() * bps);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t b = 0; b < bps; ++b)
      bits[i * bps + b] = static_cast<std::uint8_t>((labels[i] >> (bps - 1 - b)) & 1);
  return bits;
}

double raised_cosine_spectrum(double f, double baud_rate, double rolloff) {
  const double af = std::abs(f);
  const double lo = (1.0 - rolloff) * baud_rate / 2.0;
  const double hi = (1.0 + rolloff) * baud_rate / 2.0;
  if (af <= lo) return 1.0;
  if (af > hi) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi / (rolloff * baud_rate) * (af - lo)));
}

static void check_rolloff(double rolloff) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) {
    std::ostringstream os;
    os << "rolloff must be in (0, 1], got " << rolloff;
    throw ConfigError(os.str());
  }
}

std::vector<double> rrc_response(std::size_t n, double sample_rate, double baud_rate, double rolloff) {
  check_rolloff(rolloff);
  const double sps = sample_rate / baud_rate;
  const auto freqs = fft_frequencies(n, sample_rate);
  std::vector<double> h(n);
  for (std::size_t k = 0; k < n; ++k)
    h[k] = std::sqrt(sps * raised_cosine_spectrum(freqs[k], baud_rate, rolloff));
  return h;
}

ComplexVector rrc_taps(std::size_t n, double sample_rate, double baud_rate, double rolloff) {
  const auto h = rrc_response(n, sample_rate, baud_rate, rolloff);
  ComplexVector taps(h.begin(), h.end());
  ifft_inplace(taps);
  return taps;
}

double rrc_pulse(double t, double baud_rate, double rolloff, int sps) {
  const double x = t * baud_rate;
  const double b = rolloff;
  double h;
  if (std::abs(x) < 1e-12) {
    h = 1.0 - b + 4.0 * b / kPi;
  } else if (std::abs(std::abs(x) - 1.0 / (4.0 * b)) < 1e-12) {
    h = b / std::sqrt(2.0) *
        ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
  } else {
    h = (std::sin(kPi * x * (1.0 - b)) + 4.0 * b * x * std::cos(kPi * x * (1.0 + b))) /
        (kPi * x * (1.0 - 16.0 * b * b * x * x));
  }
  return h / std::sqrt(static_cast<double>(sps));
}

SignalGrid shape_pulses(const SymbolFrame& frame, int sps, double rolloff) {
  if (sps < 2) throw ConfigError("shape_pulses: sps must be >= 2");
  check_rolloff(rolloff);
  if (frame.symbols.empty()) throw ConfigError("shape_pulses: empty symbol frame");
  SignalGrid out;
  out.sample_rate = frame.baud_rate * sps;
  out.samples.assign(frame.symbols.size() * static_cast<std::size_t>(sps), Complex{});
  for (std::size_t i = 0; i < frame.symbols.size(); ++i)
    out.samples[i * static_cast<std::size_t>(sps)] = frame.symbols[i];
  fft_inplace(out.samples);
  const auto h = rrc_response(out.size(), out.sample_rate, frame.baud_rate, rolloff);
  for (std::size_t k = 0; k < h.size(); ++k) out.samples[k] *= h[k];
  ifft_inplace(out.samples);
  return out;
}

SignalGrid matched_filter(const SignalGrid& sig, double baud_rate, double rolloff) {
  if (sig.samples.empty() || !(sig.sample_rate > 0)) throw ConfigError("matched_filter: invalid input grid");
  SignalGrid out = sig;
  fft_inplace(out.samples);
  const auto h = rrc_response(out.size(), out.sample_rate, baud_rate, rolloff);
  for (std::size_t k = 0; k < h.size(); ++k) out.samples[k] *= h[k];
  ifft_inplace(out.samples);
  return out;
}

ComplexVector decimate(std::span<const Complex> samples, std::size_t factor, std::size_t offset) {
  if (factor == 0) throw ConfigError("decimate: factor must be positive");
  ComplexVector out;
  out.reserve(samples.size() / factor + 1);
  for (std::size_t i = offset; i < samples.size(); i += factor) out.push_back(samples[i]);
  return out;
}

SignalGrid resample(const SignalGrid& sig, double target_rate) {
  if (!(sig.sample_rate > 0) || !(target_rate > 0)) throw ConfigError("resample: rates must be positive");
  const std::size_t n = sig.size();
  const std::size_t m = checked_integer(static_cast<double>(n) * target_rate / sig.sample_rate,
                                        "resampled length");
  SignalGrid out;
  out.sample_rate = target_rate;
  out.center_offset = sig.center_offset;
  if (n == 0 || m == 0) return out;
  ComplexVector spec = fft(sig.samples);
  out.samples.assign(m, Complex{});
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  const long lo = -static_cast<long>(std::min(n, m) / 2);
  const long hi = static_cast<long>((std::min(n, m) + 1) / 2);
  for (long k = lo; k < hi; ++k) out.samples[wrap_bin(k, m)] = spec[wrap_bin(k, n)] * scale;
  ifft_inplace(out.samples);
  return out;
}

double channel_offset(std::size_t index, std::size_t n_ch, double spacing) {
  return (static_cast<double>(index) - (static_cast<double>(n_ch) - 1.0) / 2.0) * spacing;
}

void WdmEnsemble::validate() const {
  if (channels.empty()) return;
  const auto& ref = channels.front();
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& ch = channels[i];
    if (ch.sample_rate != ref.sample_rate || ch.size() != ref.size())
      throw DataError("WdmEnsemble: channels must share sample rate and length");
    const double expected = channel_offset(i, channels.size(), spacing);
    if (std::abs(ch.center_offset - expected) > 1e-6 * std::max(1.0, spacing))
      throw DataError("WdmEnsemble: channel offset inconsistent with spacing");
  }
}

double required_mux_rate(std::size_t n_ch, double spacing, double baud_rate, double rolloff) {
  return static_cast<double>(n_ch) * spacing + (1.0 + rolloff) * baud_rate;
}

SignalGrid mux(const WdmEnsemble& ensemble, double target_rate, double rolloff) {
  ensemble.validate();
  SignalGrid out;
  out.sample_rate = target_rate;
  if (ensemble.channels.empty()) return out;
  const double required = required_mux_rate(ensemble.size(), ensemble.spacing, ensemble.baud_rate, rolloff);
  if (target_rate < required) {
    std::ostringstream os;
    os << "mux: target rate " << target_rate << " Hz aliases; at least " << required
       << " Hz required for " << ensemble.size() << " channels";
    throw ConfigError(os.str());
  }
  const auto& first = ensemble.channels.front();
  const std::size_t n = first.size();
  const std::size_t m = checked_integer(static_cast<double>(n) * target_rate / first.sample_rate,
                                        "mux output length");
  const double duration = static_cast<double>(m) / target_rate;
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  ComplexVector wide(m, Complex{});
  for (const auto& ch : ensemble.channels) {
    const long signed_shift = bin_shift(ch.center_offset, duration);
    const ComplexVector spec = fft(ch.samples);
    for (std::size_t k = 0; k < n; ++k)
      wide[wrap_bin(signed_bin(k, n) + signed_shift, m)] += spec[k] * scale;
  }
  ifft_inplace(wide);
  out.samples = std::move(wide);
  return out;
}

WdmEnsemble demux(const SignalGrid& wideband, const FrequencyPlan& plan, int out_sps) {
  WdmEnsemble out;
  out.spacing = plan.spacing;
  out.baud_rate = plan.baud_rate;
  if (wideband.samples.empty()) return out;
  if (out_sps < 1) throw ConfigError("demux: out_sps must be positive");
  const double band = plan.band_width > 0 ? plan.band_width : plan.spacing;
  if (band > plan.spacing * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "demux: band-select width " << band << " Hz exceeds the channel spacing " << plan.spacing
       << " Hz and would overlap neighbouring channels";
    throw ConfigError(os.str());
  }
  const double out_rate = plan.baud_rate * out_sps;
  if (band > out_rate * (1.0 + 1e-12)) throw ConfigError("demux: out_sps too small for the channel band");
  const std::size_t m = wideband.size();
  const std::size_t n = checked_integer(static_cast<double>(m) * out_rate / wideband.sample_rate,
                                        "demux output length");
  const double duration = wideband.duration();
  const double scale = static_cast<double>(n) / static_cast<double>(m);
  const ComplexVector spec = fft(wideband.samples);
  const auto freqs = fft_frequencies(n, out_rate);
  for (std::size_t i = 0; i < plan.n_ch; ++i) {
    const double offset = channel_offset(i, plan.n_ch, plan.spacing);
    const long signed_shift = bin_shift(offset, duration);
    ComplexVector bins(n, Complex{});
    for (std::size_t k = 0; k < n; ++k) {
      if (freqs[k] < -band / 2 || freqs[k] >= band / 2) continue;
      bins[k] = spec[wrap_bin(signed_bin(k, n) + signed_shift, m)] * scale;
    }
    ifft_inplace(bins);
    SignalGrid ch;
    ch.samples = std::move(bins);
    ch.sample_rate = out_rate;
    ch.center_offset = offset;
    out.channels.push_back(std::move(ch));
  }
  return out;
}

}  // namespace felab
