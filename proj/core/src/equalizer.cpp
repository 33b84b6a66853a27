// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "felab/equalizer_graph.hpp"
#include "felab/errors.hpp"

namespace felab {
namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
void check_tensor(const char* name, const Tensor<T>& t, const std::vector<std::size_t>& expected) {
  if (t.shape() != expected) {
    std::ostringstream os;
    os << "parameter tensor " << name << " has shape " << shape_string(t.shape()) << ", spec requires "
       << shape_string(expected);
    throw DataError(os.str());
  }
}

struct Shapes {
  std::vector<std::size_t> alpha, beta, fir;
};

Shapes shapes_for(const EqualizerSpec& spec) {
  const auto s = static_cast<std::size_t>(spec.total_steps());
  const auto c = static_cast<std::size_t>(spec.n_ch);
  return {{s, c, static_cast<std::size_t>(spec.s_spm)},
          {s, c, c - 1, static_cast<std::size_t>(spec.s_xpm)},
          {s, c, static_cast<std::size_t>(spec.s_cd)}};
}

bool is_odd(int v) { return v > 0 && v % 2 == 1; }

// Power-weighted centre of a segment of length `seg` with attenuation a (1/km).
double centroid_offset(double seg, double a) {
  if (a * seg < 1e-9) return seg / 2.0;
  const double e = std::exp(-a * seg);
  return 1.0 / a - seg * e / (1.0 - e);
}

// Smooth step with every derivative zero at 0 and 1.
double smooth_step(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

// Integral of smooth_step over [0, x], composite 5-point Gauss-Legendre.
double smooth_step_integral(double x) {
  static constexpr double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                   0.9061798459386640};
  static constexpr double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                   0.4786286704993665, 0.2369268850561891};
  constexpr int panels = 64;
  const double h = x / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p)
    for (int q = 0; q < 5; ++q) acc += gw[q] * smooth_step(h * (p + 0.5) + 0.5 * h * gx[q]);
  return 0.5 * h * acc;
}

}  // namespace

std::string_view to_string(StepPlacement p) {
  return p == StepPlacement::midpoint ? "midpoint" : "power-centroid";
}

StepPlacement placement_from_string(std::string_view name) {
  if (name == "midpoint") return StepPlacement::midpoint;
  if (name == "power-centroid") return StepPlacement::power_centroid;
  throw ConfigError("unknown step placement '" + std::string(name) + "'");
}

double EqualizerSpec::step_distance_km(int k) const {
  const double seg = step_length_km();
  const int span = spans - 1 - k / steps_per_span;
  const int segment = steps_per_span - 1 - k % steps_per_span;
  const double local = placement == StepPlacement::midpoint ? seg / 2.0 : centroid_offset(seg, fiber.alpha());
  return total_length_km() - (span * fiber.length_km + segment * seg + local);
}

long EqualizerSpec::alignment_shift(int ch) const {
  const double offset = channel_offset(static_cast<std::size_t>(ch), static_cast<std::size_t>(n_ch), spacing);
  const double delay = fiber.beta2() * 2.0 * std::numbers::pi * offset * total_length_km();
  return std::lround(delay * sample_rate());
}

double EqualizerSpec::compensation_band() const {
  const double band = band_hz > 0 ? band_hz : (n_ch > 1 ? spacing / 2 : 0.625 * baud_rate);
  return std::min(band, sample_rate() / 2);
}

void EqualizerSpec::validate() const {
  fiber.validate();
  auto fail = [](const std::string& msg) { throw ConfigError("equalizer spec: " + msg); };
  if (n_ch < 1) fail("n_ch must be >= 1");
  if (steps_per_span < 1 || spans < 1) fail("steps_per_span and spans must be >= 1");
  if (!is_odd(s_spm)) fail("s_spm must be odd");
  if (!is_odd(s_xpm)) fail("s_xpm must be odd");
  if (s_cd != 0 && !is_odd(s_cd)) fail("s_cd must be odd (or 0 to disable field filters)");
  if (overlap_m < 1 || overlap_m >= n_fft) fail("overlap_m must satisfy 1 <= overlap_m < n_fft");
  if (sps < 1) fail("sps must be >= 1");
  if (!(baud_rate > 0)) fail("baud_rate must be positive");
  if (n_ch > 1 && !(spacing > 0)) fail("spacing must be positive");
  if (!(band_hz >= 0)) fail("band_hz must be non-negative");
  if (!(delta_cd >= 0)) fail("delta_cd must be non-negative");
  if (s_cd == 0 && delta_cd != 0) fail("delta_cd requires field filters (s_cd > 0)");
  if (delegated_length_km() > step_length_km() * (1 + 1e-12)) {
    std::ostringstream os;
    os << "delegated dispersion " << delta_cd << " ps/nm spans " << delegated_length_km()
       << " km, more than one step (" << step_length_km() << " km)";
    fail(os.str());
  }
}

EqualizerParams EqualizerParams::zeros(const EqualizerSpec& spec) {
  const Shapes s = shapes_for(spec);
  return {Tensor<double>(s.alpha), Tensor<double>(s.beta), Tensor<Complex>(s.fir), Tensor<Complex>(s.fir)};
}

void EqualizerParams::check_shapes(const EqualizerSpec& spec) const {
  const Shapes s = shapes_for(spec);
  check_tensor("alpha", alpha, s.alpha);
  check_tensor("beta", beta, s.beta);
  check_tensor("h_in", h_in, s.fir);
  check_tensor("h_out", h_out, s.fir);
}

bool EqualizerParams::all_finite() const {
  for (double v : alpha.data())
    if (!std::isfinite(v)) return false;
  for (double v : beta.data())
    if (!std::isfinite(v)) return false;
  for (const auto* t : {&h_in, &h_out})
    for (const auto& v : t->data())
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

ComplexVector cd_compensation_response(const EqualizerSpec& spec, double offset_hz, double distance_km,
                                       std::size_t n) {
  const double beta2 = spec.fiber.beta2();
  const double big_omega = 2.0 * std::numbers::pi * offset_hz;
  const auto freqs = fft_frequencies(n, spec.sample_rate());
  ComplexVector h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 2.0 * std::numbers::pi * freqs[i];
    h[i] = std::polar(1.0, -(0.5 * beta2 * w * w + beta2 * big_omega * w) * distance_km);
  }
  return h;
}

ComplexVector stage_response(const EqualizerSpec& spec, double offset_hz, double distance_km, std::size_t n,
                             long advance_samples) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double beta2 = spec.fiber.beta2();
  const double big_omega = two_pi * offset_hz;
  const double fs = spec.sample_rate();
  const double fb = spec.compensation_band();
  const auto adv = static_cast<double>(advance_samples);
  auto phase = [&](double w) { return -(0.5 * beta2 * w * w + beta2 * big_omega * w) * distance_km + w * adv / fs; };

  // Outside the band the group delay slides from the upper-edge parabola to
  // the lower-edge one (shifted by fs); a bump corrects the accumulated phase
  // to the nearest 2 pi multiple so the response closes on itself.
  const double wb = two_pi * fb;
  const double ws = two_pi * fs;
  const double width = ws - 2.0 * wb;
  const double slide = ws * beta2 * distance_km * width;
  const double arrival = phase(ws - wb) + 0.5 * slide;
  const double turns = std::round((arrival - phase(-wb)) / two_pi);
  const double correction = phase(-wb) + two_pi * turns - arrival;

  const auto freqs = fft_frequencies(n, fs);
  ComplexVector h(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = freqs[i];
    if (std::abs(f) <= fb || width <= 0) {
      h[i] = std::polar(1.0, phase(two_pi * f));
      continue;
    }
    if (f < 0) f += fs;
    const double x = (f - fb) / (fs - 2.0 * fb);
    h[i] = std::polar(1.0, phase(two_pi * f) + slide * smooth_step_integral(x) + correction * smooth_step(x));
  }
  return h;
}

LinearStageBank build_linear_stages(const EqualizerSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_fft);
  const double total = spec.total_length_km();
  const double delegated = spec.delegated_length_km();
  LinearStageBank bank;
  bank.n_fft = n;
  bank.pre.resize(static_cast<std::size_t>(spec.total_steps()));
  bank.post.resize(bank.pre.size());
  for (int ch = 0; ch < spec.n_ch; ++ch) {
    const double offset = channel_offset(static_cast<std::size_t>(ch), static_cast<std::size_t>(spec.n_ch), spec.spacing);
    const long shift = spec.alignment_shift(ch);
    bank.shift.push_back(shift);
    const ComplexVector full = stage_response(spec, offset, total, n, shift);
    for (int k = 0; k < spec.total_steps(); ++k) {
      ComplexVector pre = stage_response(spec, offset, spec.step_distance_km(k) - delegated, n);
      ComplexVector post(n);
      for (std::size_t i = 0; i < n; ++i) post[i] = full[i] * std::conj(pre[i]);
      bank.pre[static_cast<std::size_t>(k)].push_back(std::move(pre));
      bank.post[static_cast<std::size_t>(k)].push_back(std::move(post));
    }
    bank.full.push_back(full);
  }
  return bank;
}

std::vector<double> filter_power(std::span<const double> power, std::span<const double> taps) {
  const auto n = static_cast<long>(power.size());
  const auto half = static_cast<long>(taps.size() / 2);
  std::vector<double> out(power.size(), 0.0);
  for (long t = 0; t < n; ++t) {
    double acc = 0.0;
    const long lo = std::max(-half, -t);
    const long hi = std::min(half, n - 1 - t);
    for (long c = lo; c <= hi; ++c) acc += taps[static_cast<std::size_t>(c + half)] * power[static_cast<std::size_t>(t + c)];
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

namespace {

std::vector<double> power_of(std::span<const Complex> y) {
  std::vector<double> p(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) p[i] = std::norm(y[i]);
  return p;
}

}  // namespace

ComplexVector spm_activation(std::span<const Complex> y, std::span<const double> taps, double gamma,
                             double nonlinear_length) {
  if (taps.size() % 2 != 1) throw ConfigError("spm_activation: tap count must be odd");
  const auto drive = filter_power(power_of(y), taps);
  const Complex a(0.0, -gamma * nonlinear_length);
  ComplexVector sigma(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) sigma[t] = a * y[t] * drive[t];
  return sigma;
}

ComplexVector xpm_activation(std::span<const Complex> y, const std::vector<std::span<const Complex>>& neighbors,
                             const std::vector<std::span<const double>>& taps, double gamma,
                             double nonlinear_length) {
  if (neighbors.size() != taps.size()) {
    std::ostringstream os;
    os << "xpm_activation: " << neighbors.size() << " neighbours but " << taps.size() << " tap sets";
    throw DataError(os.str());
  }
  std::vector<double> drive(y.size(), 0.0);
  for (std::size_t r = 0; r < neighbors.size(); ++r) {
    if (neighbors[r].size() != y.size()) throw DataError("xpm_activation: neighbour length mismatch");
    if (taps[r].size() % 2 != 1 || taps[r].size() != taps.front().size())
      throw DataError("xpm_activation: tap sets must share one odd length");
    const auto pr = filter_power(power_of(neighbors[r]), taps[r]);
    for (std::size_t t = 0; t < y.size(); ++t) drive[t] += pr[t];
  }
  const Complex a(0.0, -2.0 * gamma * nonlinear_length);
  ComplexVector sigma(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) sigma[t] = a * y[t] * drive[t];
  return sigma;
}

ComplexVector fir_field_filter(std::span<const Complex> y, std::span<const Complex> taps) {
  if (taps.empty()) return ComplexVector(y.begin(), y.end());
  if (taps.size() % 2 != 1) throw ConfigError("fir_field_filter: tap count must be odd");
  const auto n = static_cast<long>(y.size());
  const auto half = static_cast<long>(taps.size() / 2);
  ComplexVector out(y.size());
  for (long t = 0; t < n; ++t) {
    Complex acc{};
    for (long c = -half; c <= half; ++c) {
      const long s = t - c;
      if (s >= 0 && s < n) acc += taps[static_cast<std::size_t>(c + half)] * y[static_cast<std::size_t>(s)];
    }
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

namespace {

void check_block(const std::vector<std::span<const Complex>>& block, const EqualizerSpec& spec) {
  if (block.size() != static_cast<std::size_t>(spec.n_ch)) {
    std::ostringstream os;
    os << "equalize_block: " << block.size() << " channels supplied, spec has " << spec.n_ch;
    throw DataError(os.str());
  }
  for (const auto& ch : block) {
    if (ch.size() != static_cast<std::size_t>(spec.n_fft)) {
      std::ostringstream os;
      os << "equalize_block: block length " << ch.size() << " != n_fft " << spec.n_fft;
      throw DataError(os.str());
    }
  }
}

// Nonlinear branch k on the shared input spectra. Returns H_post FFT(v) per
// channel and optionally records the intermediates.
std::vector<ComplexVector> branch_impl(const std::vector<ComplexVector>& spectra, int k,
                                       const EqualizerParams& params, const EqualizerSpec& spec,
                                       const LinearStageBank& stages, detail::BranchRecord* record) {
  const auto n_ch = static_cast<std::size_t>(spec.n_ch);
  const auto kk = static_cast<std::size_t>(k);
  const std::size_t n = stages.n_fft;
  std::vector<ComplexVector> fields(n_ch), filtered(n_ch);
  std::vector<std::vector<double>> powers(n_ch);
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    ComplexVector y(n);
    const auto& pre = stages.pre[kk][ch];
    for (std::size_t i = 0; i < n; ++i) y[i] = spectra[ch][i] * pre[i];
    ifft_inplace(y);
    filtered[ch] = fir_field_filter(y, params.h_in.row({kk, ch}));
    powers[ch] = power_of(filtered[ch]);
    fields[ch] = std::move(y);
  }

  const Complex a(0.0, -spec.fiber.gamma * spec.nonlinear_length_km());
  std::vector<ComplexVector> out(n_ch);
  std::vector<std::vector<double>> drives(n_ch);
  std::vector<ComplexVector> sigmas(n_ch);
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    std::vector<double> drive = filter_power(powers[ch], params.alpha.row({kk, ch}));
    for (std::size_t r = 0; r < n_ch; ++r) {
      if (r == ch) continue;
      const auto pr = filter_power(powers[r], params.beta.row({kk, ch, neighbor_slot(ch, r)}));
      for (std::size_t t = 0; t < n; ++t) drive[t] += 2.0 * pr[t];
    }
    ComplexVector sigma(n);
    for (std::size_t t = 0; t < n; ++t) sigma[t] = a * filtered[ch][t] * drive[t];
    ComplexVector v = fir_field_filter(sigma, params.h_out.row({kk, ch}));
    fft_inplace(v);
    const auto& post = stages.post[kk][ch];
    for (std::size_t i = 0; i < n; ++i) v[i] *= post[i];
    out[ch] = std::move(v);
    if (record) {
      drives[ch] = std::move(drive);
      sigmas[ch] = std::move(sigma);
    }
  }
  if (record) {
    record->field = std::move(fields);
    record->filtered = std::move(filtered);
    record->power = std::move(powers);
    record->drive = std::move(drives);
    record->sigma = std::move(sigmas);
  }
  return out;
}

}  // namespace

std::vector<ComplexVector> branch_forward(const std::vector<ComplexVector>& input_spectra, int k,
                                          const EqualizerParams& params, const EqualizerSpec& spec,
                                          const LinearStageBank& stages) {
  if (k < 0 || k >= spec.total_steps()) throw ConfigError("branch_forward: step index out of range");
  if (input_spectra.size() != static_cast<std::size_t>(spec.n_ch)) throw DataError("branch_forward: channel count mismatch");
  return branch_impl(input_spectra, k, params, spec, stages, nullptr);
}

namespace detail {

std::vector<ComplexVector> run_block(const std::vector<std::span<const Complex>>& block,
                                     const EqualizerParams& params, const EqualizerSpec& spec,
                                     const LinearStageBank& stages, std::span<const double> output_response,
                                     BlockRecord* record) {
  check_block(block, spec);
  const auto n_ch = static_cast<std::size_t>(spec.n_ch);
  const std::size_t n = stages.n_fft;
  std::vector<ComplexVector> spectra(n_ch);
  std::vector<ComplexVector> acc(n_ch, ComplexVector(n));
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    spectra[ch] = fft(block[ch]);
    for (std::size_t i = 0; i < n; ++i) acc[ch][i] = spectra[ch][i] * stages.full[ch][i];
  }
  if (record) record->branches.assign(static_cast<std::size_t>(spec.total_steps()), {});
  for (int k = 0; k < spec.total_steps(); ++k) {
    auto* rec = record ? &record->branches[static_cast<std::size_t>(k)] : nullptr;
    const auto contrib = branch_impl(spectra, k, params, spec, stages, rec);
    for (std::size_t ch = 0; ch < n_ch; ++ch)
      for (std::size_t i = 0; i < n; ++i) acc[ch][i] += contrib[ch][i];
  }
  const std::size_t head = spec.head_discard();
  const std::size_t valid = spec.valid_length();
  std::vector<ComplexVector> out(n_ch);
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    if (!output_response.empty())
      for (std::size_t i = 0; i < n; ++i) acc[ch][i] *= output_response[i];
    ifft_inplace(acc[ch]);
    out[ch].assign(acc[ch].begin() + static_cast<long>(head), acc[ch].begin() + static_cast<long>(head + valid));
  }
  return out;
}

void backward_block(const BlockRecord& record, const std::vector<ComplexVector>& grad_valid,
                    const EqualizerParams& params, const EqualizerSpec& spec, const LinearStageBank& stages,
                    std::span<const double> output_response, EqualizerParams& grads) {
  const auto n_ch = static_cast<std::size_t>(spec.n_ch);
  const std::size_t n = stages.n_fft;
  const auto nn = static_cast<double>(n);
  const std::size_t head = spec.head_discard();
  if (record.branches.size() != static_cast<std::size_t>(spec.total_steps()))
    throw DataError("backward_block: record does not match the spec");

  // Gradient of the accumulated spectrum U.
  std::vector<ComplexVector> grad_acc(n_ch);
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    ComplexVector g(n, Complex{});
    for (std::size_t i = 0; i < grad_valid[ch].size(); ++i) g[head + i] = grad_valid[ch][i];
    fft_inplace(g);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] /= nn;
      if (!output_response.empty()) g[i] *= output_response[i];
    }
    grad_acc[ch] = std::move(g);
  }

  const Complex a(0.0, -spec.fiber.gamma * spec.nonlinear_length_km());
  const auto half_spm = static_cast<long>(spec.s_spm / 2);
  const auto half_xpm = static_cast<long>(spec.s_xpm / 2);
  const auto half_cd = static_cast<long>(spec.s_cd / 2);
  const auto ln = static_cast<long>(n);

  for (int k = 0; k < spec.total_steps(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const auto& rec = record.branches[kk];
    std::vector<std::vector<double>> grad_drive(n_ch, std::vector<double>(n));
    std::vector<ComplexVector> grad_u(n_ch, ComplexVector(n));

    for (std::size_t ch = 0; ch < n_ch; ++ch) {
      // Through H_post and the forward FFT of the branch output.
      ComplexVector gv(n);
      const auto& post = stages.post[kk][ch];
      for (std::size_t i = 0; i < n; ++i) gv[i] = std::conj(post[i]) * grad_acc[ch][i];
      ifft_inplace(gv);
      for (auto& v : gv) v *= nn;

      // Through h_out.
      const auto& sigma = rec.sigma[ch];
      ComplexVector gsigma;
      const auto hout = params.h_out.row({kk, ch});
      if (hout.empty()) {
        gsigma = std::move(gv);
      } else {
        auto ghout = grads.h_out.row({kk, ch});
        gsigma.assign(n, Complex{});
        for (long c = -half_cd; c <= half_cd; ++c) {
          const auto ci = static_cast<std::size_t>(c + half_cd);
          Complex gh{};
          for (long t = std::max(0L, c); t < std::min(ln, ln + c); ++t)
            gh += gv[static_cast<std::size_t>(t)] * std::conj(sigma[static_cast<std::size_t>(t - c)]);
          ghout[ci] += gh;
          const Complex hc = std::conj(hout[ci]);
          for (long s = std::max(0L, -c); s < std::min(ln, ln - c); ++s)
            gsigma[static_cast<std::size_t>(s)] += hc * gv[static_cast<std::size_t>(s + c)];
        }
      }

      // sigma = a u drive.
      const auto& u = rec.filtered[ch];
      const auto& drive = rec.drive[ch];
      for (std::size_t t = 0; t < n; ++t) {
        grad_drive[ch][t] = (std::conj(gsigma[t]) * a * u[t]).real();
        grad_u[ch][t] = std::conj(a) * drive[t] * gsigma[t];
      }
    }

    // Power-waveform filters.
    std::vector<std::vector<double>> grad_p(n_ch, std::vector<double>(n, 0.0));
    auto accumulate_filter = [&](std::span<const double> taps, std::span<double> gtaps, long half, double scale,
                                 const std::vector<double>& gd, const std::vector<double>& p,
                                 std::vector<double>& gp) {
      for (long c = -half; c <= half; ++c) {
        const auto ci = static_cast<std::size_t>(c + half);
        double gt = 0.0;
        // out[t] uses p[t + c] for 0 <= t + c < n.
        for (long t = std::max(0L, -c); t < std::min(ln, ln - c); ++t)
          gt += gd[static_cast<std::size_t>(t)] * p[static_cast<std::size_t>(t + c)];
        gtaps[ci] += scale * gt;
        const double w = scale * taps[ci];
        if (w == 0.0) continue;
        for (long t = std::max(0L, -c); t < std::min(ln, ln - c); ++t)
          gp[static_cast<std::size_t>(t + c)] += w * gd[static_cast<std::size_t>(t)];
      }
    };
    for (std::size_t ch = 0; ch < n_ch; ++ch) {
      accumulate_filter(params.alpha.row({kk, ch}), grads.alpha.row({kk, ch}), half_spm, 1.0, grad_drive[ch],
                        rec.power[ch], grad_p[ch]);
      for (std::size_t r = 0; r < n_ch; ++r) {
        if (r == ch) continue;
        const std::size_t slot = neighbor_slot(ch, r);
        accumulate_filter(params.beta.row({kk, ch, slot}), grads.beta.row({kk, ch, slot}), half_xpm, 2.0,
                          grad_drive[ch], rec.power[r], grad_p[r]);
      }
    }

    // p = |u|^2, then h_in.
    for (std::size_t ch = 0; ch < n_ch; ++ch) {
      const auto& u = rec.filtered[ch];
      for (std::size_t t = 0; t < n; ++t) grad_u[ch][t] += 2.0 * grad_p[ch][t] * u[t];
      const auto hin = params.h_in.row({kk, ch});
      if (hin.empty()) continue;
      auto ghin = grads.h_in.row({kk, ch});
      const auto& y = rec.field[ch];
      for (long c = -half_cd; c <= half_cd; ++c) {
        Complex gh{};
        for (long t = std::max(0L, c); t < std::min(ln, ln + c); ++t)
          gh += grad_u[ch][static_cast<std::size_t>(t)] * std::conj(y[static_cast<std::size_t>(t - c)]);
        ghin[static_cast<std::size_t>(c + half_cd)] += gh;
      }
    }
  }
}

}  // namespace detail

std::vector<ComplexVector> equalize_block(const std::vector<std::span<const Complex>>& block,
                                          const EqualizerParams& params, const EqualizerSpec& spec,
                                          const LinearStageBank& stages) {
  params.check_shapes(spec);
  return detail::run_block(block, params, spec, stages, {}, nullptr);
}

StreamResult equalize_stream(const WdmEnsemble& rx, const EqualizerParams& params, const EqualizerSpec& spec) {
  return equalize_stream(rx, params, spec, build_linear_stages(spec));
}

StreamResult equalize_stream(const WdmEnsemble& rx, const EqualizerParams& params, const EqualizerSpec& spec,
                             const LinearStageBank& stages) {
  params.check_shapes(spec);
  rx.validate();
  if (rx.size() != static_cast<std::size_t>(spec.n_ch)) {
    std::ostringstream os;
    os << "equalize_stream: " << rx.size() << " channels supplied, spec has " << spec.n_ch;
    throw DataError(os.str());
  }
  const std::size_t n = static_cast<std::size_t>(spec.n_fft);
  const std::size_t total = rx.channels.front().size();
  if (total < n) {
    std::ostringstream os;
    os << "equalize_stream: " << total << " samples is shorter than one block of " << n;
    throw DataError(os.str());
  }
  if (stages.shift.size() != rx.size() || stages.n_fft != n)
    throw DataError("equalize_stream: linear stage bank does not match the spec");
  const std::size_t valid = spec.valid_length();
  const std::size_t out_len = total - static_cast<std::size_t>(spec.overlap_m - 1);

  StreamResult result;
  result.leading_trim = spec.head_discard();
  result.trailing_trim = static_cast<std::size_t>(spec.overlap_m - 1) - result.leading_trim;
  result.output.spacing = rx.spacing;
  result.output.baud_rate = rx.baud_rate;
  for (const auto& ch : rx.channels) {
    SignalGrid g;
    g.sample_rate = ch.sample_rate;
    g.center_offset = ch.center_offset;
    g.samples.assign(out_len, Complex{});
    result.output.channels.push_back(std::move(g));
  }

  // Block-local sample i sits at raw position start + i, which is output
  // sample start + i + shift of each channel.
  const auto [lo_it, hi_it] = std::minmax_element(stages.shift.begin(), stages.shift.end());
  const long raw_begin = -*hi_it;
  const long raw_end = static_cast<long>(out_len) - *lo_it;
  const auto lvalid = static_cast<long>(valid);
  const long blocks = (raw_end - raw_begin + lvalid - 1) / lvalid;
  const auto ltotal = static_cast<long>(total);
  const auto lout = static_cast<long>(out_len);

  std::vector<ComplexVector> buffers(rx.size(), ComplexVector(n));
  for (long b = 0; b < blocks; ++b) {
    const long start = raw_begin + b * lvalid;
    std::vector<std::span<const Complex>> views;
    for (std::size_t ch = 0; ch < rx.size(); ++ch) {
      auto& buf = buffers[ch];
      const auto& src = rx.channels[ch].samples;
      for (std::size_t i = 0; i < n; ++i) {
        const long idx = start + static_cast<long>(i);
        buf[i] = (idx >= 0 && idx < ltotal) ? src[static_cast<std::size_t>(idx)] : Complex{};
      }
      views.emplace_back(buf);
    }
    const auto out = detail::run_block(views, params, spec, stages, {}, nullptr);
    for (std::size_t ch = 0; ch < rx.size(); ++ch) {
      for (long i = 0; i < lvalid; ++i) {
        const long s = start + i + stages.shift[ch];
        if (s >= 0 && s < lout) result.output.channels[ch].samples[static_cast<std::size_t>(s)] = out[ch][static_cast<std::size_t>(i)];
      }
    }
  }
  return result;
}

}  // namespace felab
