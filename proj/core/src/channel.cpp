// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/channel.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include "felab/errors.hpp"

namespace felab {

double FiberParams::beta2() const {
  const double lambda = ref_wavelength_nm * 1e-9;  // m
  const double d_si = dispersion * 1e-3;            // ps/(nm km) -> s/(m km)
  return -d_si * lambda * lambda / (2.0 * std::numbers::pi * kSpeedOfLight);
}

double FiberParams::alpha() const { return alpha_db * std::log(10.0) / 10.0; }

double FiberParams::effective_length_km(double length) const {
  const double a = alpha();
  if (a == 0.0) return length;
  return (1.0 - std::exp(-a * length)) / a;
}

double FiberParams::dispersion_length_km(double ps_per_nm) const {
  if (dispersion == 0.0) return 0.0;
  return ps_per_nm / std::abs(dispersion);
}

void FiberParams::validate() const {
  if (!(length_km > 0)) throw ConfigError("fiber length must be positive");
  if (alpha_db < 0) throw ConfigError("fiber loss must be non-negative");
  if (!(ref_wavelength_nm > 0)) throw ConfigError("reference wavelength must be positive");
  if (!std::isfinite(dispersion) || !std::isfinite(gamma)) throw ConfigError("fiber parameters must be finite");
}

void LinkSpec::validate() const {
  fiber.validate();
  if (spans < 1) throw ConfigError("link needs at least one span");
  const double loss = fiber.alpha_db * fiber.length_km;
  if (std::abs(edfa_gain_db - loss) > 1e-9 * std::max(1.0, loss)) {
    std::ostringstream os;
    os << "EDFA gain " << edfa_gain_db << " dB does not compensate the span loss of " << loss << " dB";
    throw ConfigError(os.str());
  }
}

LinkSpec LinkSpec::matched(int spans, const FiberParams& fiber, double nf_db) {
  LinkSpec link;
  link.spans = spans;
  link.fiber = fiber;
  link.edfa_nf_db = nf_db;
  link.edfa_gain_db = fiber.alpha_db * fiber.length_km;
  return link;
}

SignalGrid ssfm_propagate(const SignalGrid& field, const FiberParams& fiber, const SsfmOptions& options) {
  fiber.validate();
  if (!(options.step_km > 0)) throw ConfigError("ssfm: step size must be positive");
  if (field.samples.empty() || !(field.sample_rate > 0)) throw ConfigError("ssfm: invalid input grid");

  const std::size_t n = field.size();
  const auto steps = static_cast<std::size_t>(std::ceil(fiber.length_km / options.step_km - 1e-9));
  const double h = fiber.length_km / static_cast<double>(steps);
  const double beta2 = fiber.beta2();
  const double alpha = fiber.alpha();

  // Half-step linear operator exp(+j beta2/2 w^2 h/2 - alpha h/4).
  const auto freqs = fft_frequencies(n, field.sample_rate);
  ComplexVector half(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 2.0 * std::numbers::pi * freqs[k];
    half[k] = std::polar(std::exp(-alpha * h / 4.0), 0.5 * beta2 * w * w * h / 2.0);
  }

  SignalGrid out = field;
  auto& a = out.samples;
  fft_inplace(a);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < n; ++k) a[k] *= half[k];
    if (options.nonlinear && fiber.gamma != 0.0) {
      ifft_inplace(a);
      double peak = 0.0;
      for (const auto& v : a) peak = std::max(peak, std::norm(v));
      if (options.step_check != StepCheck::ignore && fiber.gamma * peak * h > options.max_step_phase) {
        std::ostringstream os;
        os << "ssfm: nonlinear phase per step " << fiber.gamma * peak * h << " rad exceeds "
           << options.max_step_phase << " rad; reduce step_km";
        if (options.step_check == StepCheck::reject) throw NumericError(os.str());
        std::cerr << "warning: " << os.str() << '\n';
      }
      for (auto& v : a) v *= std::polar(1.0, fiber.gamma * std::norm(v) * h);
      fft_inplace(a);
    }
    for (std::size_t k = 0; k < n; ++k) a[k] *= half[k];
  }
  ifft_inplace(a);
  return out;
}

double ase_psd(double gain_db, double nf_db, double carrier_hz) {
  const double g = std::pow(10.0, gain_db / 10.0);
  const double f = std::pow(10.0, nf_db / 10.0);
  return (g - 1.0) * f * kPlanck * carrier_hz / 2.0;
}

SignalGrid edfa(const SignalGrid& field, double gain_db, double nf_db, std::mt19937_64& rng, double carrier_hz) {
  if (gain_db < 0) throw ConfigError("edfa: gain must be non-negative");
  SignalGrid out = field;
  const double amp = std::pow(10.0, gain_db / 20.0);
  const double noise_power = ase_psd(gain_db, nf_db, carrier_hz) * field.sample_rate;
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_power / 2.0));
  for (auto& v : out.samples) {
    v *= amp;
    if (noise_power > 0) {
      const double re = normal(rng);
      const double im = normal(rng);
      v += Complex(re, im);
    }
  }
  return out;
}

double dbm_to_watts(double dbm) { return std::isinf(dbm) && dbm < 0 ? 0.0 : 1e-3 * std::pow(10.0, dbm / 10.0); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

SignalGrid transmit(const WdmEnsemble& ensemble, const LinkSpec& link, double launch_power_dbm,
                    std::uint64_t seed, const TransmitOptions& options) {
  link.validate();
  ensemble.validate();
  const double target = dbm_to_watts(launch_power_dbm);
  WdmEnsemble scaled = ensemble;
  for (auto& ch : scaled.channels) {
    const double p = ch.power();
    const double scale = p > 0 ? std::sqrt(target / p) : 0.0;
    for (auto& v : ch.samples) v *= scale;
  }
  SignalGrid field = mux(scaled, options.sim_rate, options.rolloff);
  std::mt19937_64 rng(derive_seed(seed, 0x5a5e));
  for (int span = 0; span < link.spans; ++span) {
    field = ssfm_propagate(field, link.fiber, options.ssfm);
    if (options.noise) {
      field = edfa(field, link.edfa_gain_db, link.edfa_nf_db, rng);
    } else {
      for (auto& v : field.samples) v *= std::pow(10.0, link.edfa_gain_db / 20.0);
    }
  }
  return field;
}

}  // namespace felab
