// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include <numbers>

#include "doctest.h"
#include "felab/cd_fir.hpp"
#include "felab/equalizer.hpp"
#include "felab/errors.hpp"
#include "felab/training.hpp"
#include "test_support.hpp"

using namespace felab;
using felab::test::max_abs_diff;

namespace {

EqualizerSpec small_spec(int n_ch = 3) {
  EqualizerSpec s;
  s.n_ch = n_ch;
  s.spans = 2;
  s.steps_per_span = 2;
  s.s_spm = 5;
  s.s_xpm = 7;
  s.n_fft = 512;
  s.overlap_m = 128;
  return s;
}

EqualizerParams random_params(const EqualizerSpec& spec, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  EqualizerParams p = EqualizerParams::zeros(spec);
  for (auto& v : p.alpha.data()) v = g(rng);
  for (auto& v : p.beta.data()) v = g(rng);
  for (auto& v : p.h_in.data()) v = {g(rng), g(rng)};
  for (auto& v : p.h_out.data()) v = {g(rng), g(rng)};
  return p;
}

std::vector<ComplexVector> random_block(const EqualizerSpec& spec, std::uint64_t seed, double scale = 0.05) {
  std::mt19937_64 rng(seed);
  std::vector<ComplexVector> b;
  for (int ch = 0; ch < spec.n_ch; ++ch) {
    b.push_back(test::bandlimited_field(static_cast<std::size_t>(spec.n_fft), rng, 0.6));
    for (auto& v : b.back()) v *= scale;
  }
  return b;
}

std::vector<std::span<const Complex>> views(const std::vector<ComplexVector>& b) {
  return {b.begin(), b.end()};
}

// exp(-j (beta2/2 w^2 + beta2 W w) z), written out independently.
ComplexVector cdc_response(const EqualizerSpec& spec, std::size_t ch, double z, std::size_t n, long advance = 0) {
  const double b2 = spec.fiber.beta2();
  const double fs = spec.sample_rate();
  const double big = 2 * std::numbers::pi * ((static_cast<double>(ch) - (spec.n_ch - 1) / 2.0) * spec.spacing);
  ComplexVector h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = (k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) * fs / static_cast<double>(n);
    const double w = 2 * std::numbers::pi * f;
    h[k] = std::exp(Complex(0, -(0.5 * b2 * w * w + b2 * big * w) * z + w * static_cast<double>(advance) / fs));
  }
  return h;
}

ComplexVector spm_oracle(const ComplexVector& y, const std::vector<double>& a, double gamma, double len) {
  const long n = static_cast<long>(y.size()), h = static_cast<long>(a.size() / 2);
  ComplexVector s(y.size());
  for (long t = 0; t < n; ++t) {
    double acc = 0;
    for (long c = -h; c <= h; ++c)
      if (t + c >= 0 && t + c < n) acc += a[static_cast<std::size_t>(c + h)] * std::norm(y[static_cast<std::size_t>(t + c)]);
    s[static_cast<std::size_t>(t)] = Complex(0, -gamma * len) * y[static_cast<std::size_t>(t)] * acc;
  }
  return s;
}

}  // namespace

TEST_CASE("spec validation") {
  EqualizerSpec s;
  CHECK_NOTHROW(s.validate());
  auto bad = [&](auto mutate) {
    EqualizerSpec t = s;
    mutate(t);
    CHECK_THROWS_AS(t.validate(), ConfigError);
  };
  bad([](EqualizerSpec& t) { t.s_spm = 6; });
  bad([](EqualizerSpec& t) { t.s_xpm = 0; });
  bad([](EqualizerSpec& t) { t.s_cd = 4; });
  bad([](EqualizerSpec& t) { t.overlap_m = t.n_fft; });
  bad([](EqualizerSpec& t) { t.steps_per_span = 0; });
  bad([](EqualizerSpec& t) { t.delta_cd = -1; });
  bad([](EqualizerSpec& t) { t.s_cd = 0; });  // delta_cd still 4.25
  // delegated 0.25 km exceeds a 0.2 km step
  bad([](EqualizerSpec& t) { t.steps_per_span = 500; });
  EqualizerSpec plain = s;
  plain.s_cd = 0;
  plain.delta_cd = 0;
  CHECK_NOTHROW(plain.validate());
}

TEST_CASE("step positions") {
  EqualizerSpec s;
  s.spans = 2;
  CHECK(s.step_distance_km(0) == doctest::Approx(50.0));
  CHECK(s.step_distance_km(1) == doctest::Approx(150.0));
  s.steps_per_span = 2;
  CHECK(s.step_distance_km(0) == doctest::Approx(25.0));
  CHECK(s.step_distance_km(1) == doctest::Approx(75.0));
  CHECK(s.step_distance_km(3) == doctest::Approx(175.0));
  s.steps_per_span = 1;
  s.placement = StepPlacement::power_centroid;
  // Segment power centroid sits 20.70 km after the amplifier.
  CHECK(s.step_distance_km(0) == doctest::Approx(100.0 - 20.70).epsilon(1e-3));
  CHECK(placement_from_string(to_string(StepPlacement::power_centroid)) == StepPlacement::power_centroid);
}

TEST_CASE("alignment shift follows walk-off") {
  EqualizerSpec s;
  CHECK(s.alignment_shift(1) == 0);
  CHECK(s.alignment_shift(0) == -s.alignment_shift(2));
  // 40 GHz offset over 600 km at 64 GS/s
  const double tau = 21.6826e-24 * 2 * std::numbers::pi * 40e9 * 600;
  CHECK(s.alignment_shift(0) == std::lround(tau * 64e9));
}

TEST_CASE("linear stages are all-pass and telescope") {
  for (int n_ch : {1, 2, 3}) {
    const EqualizerSpec spec = small_spec(n_ch);
    const auto bank = build_linear_stages(spec);
    REQUIRE(bank.pre.size() == 4);
    for (std::size_t k = 0; k < bank.pre.size(); ++k) {
      for (std::size_t ch = 0; ch < static_cast<std::size_t>(n_ch); ++ch) {
        for (std::size_t i = 0; i < bank.n_fft; ++i) {
          CHECK(std::abs(std::abs(bank.pre[k][ch][i]) - 1.0) < 1e-12);
          CHECK(std::abs(std::abs(bank.post[k][ch][i]) - 1.0) < 1e-12);
          CHECK(std::abs(bank.pre[k][ch][i] * bank.post[k][ch][i] - bank.full[ch][i]) < 1e-12);
        }
      }
    }
  }
}

double in_band_diff(const EqualizerSpec& spec, const ComplexVector& a, const ComplexVector& b) {
  const auto freqs = fft_frequencies(a.size(), spec.sample_rate());
  double err = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(freqs[i]) <= spec.compensation_band()) err = std::max(err, std::abs(a[i] - b[i]));
  return err;
}

TEST_CASE("stage responses match the compensation formula in band") {
  EqualizerSpec spec = small_spec(3);
  CHECK(spec.compensation_band() == 20e9);
  const auto bank = build_linear_stages(spec);
  const auto n = bank.n_fft;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const long shift = spec.alignment_shift(static_cast<int>(ch));
    CHECK(in_band_diff(spec, bank.full[ch], cdc_response(spec, ch, spec.total_length_km(), n, shift)) < 1e-9);
    for (int k = 0; k < spec.total_steps(); ++k) {
      const double z = spec.step_distance_km(k) - spec.delegated_length_km();
      CHECK(in_band_diff(spec, bank.pre[static_cast<std::size_t>(k)][ch], cdc_response(spec, ch, z, n)) < 1e-9);
    }
  }
  // Without delegation the last step plus the remaining half segment is the
  // full-link compensation for the centre channel.
  spec.delta_cd = 0;
  const auto b0 = build_linear_stages(spec);
  const auto rest = cdc_response(spec, 1, spec.step_length_km() / 2, n);
  ComplexVector prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = b0.pre.back()[1][i] * rest[i];
  CHECK(in_band_diff(spec, prod, b0.full[1]) < 1e-9);
}

TEST_CASE("full-band stages are the plain formula") {
  EqualizerSpec spec = small_spec(3);
  spec.band_hz = spec.sample_rate();
  CHECK(spec.compensation_band() == spec.sample_rate() / 2);
  const auto bank = build_linear_stages(spec);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const long shift = spec.alignment_shift(static_cast<int>(ch));
    CHECK(max_abs_diff(bank.full[ch], cdc_response(spec, ch, spec.total_length_km(), bank.n_fft, shift)) < 1e-9);
  }
  EqualizerSpec one = small_spec(1);
  CHECK(one.compensation_band() == doctest::Approx(20e9));
}

TEST_CASE("band-limited stages have compact impulse responses") {
  EqualizerSpec spec;
  spec.n_ch = 9;
  const std::size_t n = 2048;
  for (int ch : {0, 4, 8}) {
    const double offset = channel_offset(static_cast<std::size_t>(ch), 9, spec.spacing);
    for (double z : {600.0, 250.0, 30.0}) {
      const long adv = std::lround(spec.alignment_shift(ch) * z / spec.total_length_km());
      for (bool bridged : {true, false}) {
        EqualizerSpec s = spec;
        if (!bridged) s.band_hz = s.sample_rate();
        const auto h = ifft(stage_response(s, offset, z, n, adv));
        double tail = 0;
        for (std::size_t t = 400; t + 400 <= n; ++t) tail = std::max(tail, std::abs(h[t]));
        if (bridged)
          CHECK(tail < 1e-12);
        else
          CHECK(tail > 1e-6);
      }
    }
  }
}

TEST_CASE("SPM activation") {
  std::mt19937_64 rng(1);
  const double gamma = 1.3, len = 21.5;
  SUBCASE("zero taps give zero") {
    const auto y = test::random_field(64, rng);
    const std::vector<double> taps(7, 0.0);
    CHECK(test::max_abs(spm_activation(y, taps, gamma, len)) == 0.0);
  }
  SUBCASE("centre tap on a constant field") {
    const Complex a(0.3, -0.1);
    const ComplexVector y(32, a);
    const std::vector<double> taps{0, 0, 1, 0, 0};
    const Complex want = Complex(0, -gamma * len) * a * std::norm(a);
    for (const auto& v : spm_activation(y, taps, gamma, len)) CHECK(std::abs(v - want) < 1e-15);
  }
  SUBCASE("matches a direct double loop") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 16 + rng() % 200;
      const auto y = test::random_field(n, rng);
      const auto taps = test::random_real(2 * (rng() % 6) + 1, rng);
      const auto got = spm_activation(y, taps, gamma, len);
      CHECK(max_abs_diff(got, spm_oracle(y, taps, gamma, len)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(spm_activation(ComplexVector(4), std::vector<double>(2), gamma, len), ConfigError);
}

TEST_CASE("XPM activation") {
  std::mt19937_64 rng(2);
  const double gamma = 1.3, len = 21.5;
  SUBCASE("no neighbours") {
    const auto y = test::random_field(50, rng);
    CHECK(test::max_abs(xpm_activation(y, {}, {}, gamma, len)) == 0.0);
  }
  SUBCASE("probe and pump") {
    const Complex a(0.2, 0.1), b(-0.4, 0.3);
    const ComplexVector y(32, a), pump(32, b);
    const std::vector<double> taps{0, 0, 0, 1, 0, 0, 0};
    const auto out = xpm_activation(y, {pump}, {taps}, gamma, len);
    const Complex want = Complex(0, -2 * gamma * len) * a * std::norm(b);
    for (const auto& v : out) CHECK(std::abs(v - want) < 1e-15);
  }
  SUBCASE("matches a direct double loop") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 16 + rng() % 200;
      const std::size_t s = 2 * (rng() % 8) + 1;
      const auto y = test::random_field(n, rng);
      std::vector<ComplexVector> nb{test::random_field(n, rng), test::random_field(n, rng)};
      std::vector<std::vector<double>> taps{test::random_real(s, rng), test::random_real(s, rng)};
      const auto got = xpm_activation(y, {nb[0], nb[1]}, {taps[0], taps[1]}, gamma, len);
      ComplexVector want(n);
      const long h = static_cast<long>(s / 2);
      for (long t = 0; t < static_cast<long>(n); ++t) {
        double acc = 0;
        for (std::size_t r = 0; r < 2; ++r)
          for (long c = -h; c <= h; ++c)
            if (t + c >= 0 && t + c < static_cast<long>(n))
              acc += taps[r][static_cast<std::size_t>(c + h)] * std::norm(nb[r][static_cast<std::size_t>(t + c)]);
        want[static_cast<std::size_t>(t)] = Complex(0, -2 * gamma * len) * y[static_cast<std::size_t>(t)] * acc;
      }
      CHECK(max_abs_diff(got, want) < 1e-14 * (1 + test::max_abs(want)));
    }
  }
  SUBCASE("shape mismatch is rejected") {
    const auto y = test::random_field(20, rng);
    const auto nb = test::random_field(20, rng);
    const std::vector<double> t3(3, 1.0), t5(5, 1.0);
    CHECK_THROWS_AS(xpm_activation(y, {nb}, {}, gamma, len), DataError);
    CHECK_THROWS_AS(xpm_activation(y, {nb, nb}, {t3, t5}, gamma, len), DataError);
    const auto short_nb = test::random_field(10, rng);
    CHECK_THROWS_AS(xpm_activation(y, {short_nb}, {t3}, gamma, len), DataError);
  }
}

TEST_CASE("field FIR filter") {
  std::mt19937_64 rng(3);
  const auto y = test::random_field(100, rng);
  const ComplexVector identity{0, 0, 1, 0, 0};
  CHECK(max_abs_diff(fir_field_filter(y, identity), y) == 0.0);
  CHECK(max_abs_diff(fir_field_filter(y, {}), y) == 0.0);
  // tap at c = +1 delays by one sample
  const ComplexVector delay{0, 0, 0, 1, 0};
  const auto d = fir_field_filter(y, delay);
  CHECK(d[0] == Complex{});
  for (std::size_t t = 1; t < y.size(); ++t) CHECK(d[t] == y[t - 1]);
  const ComplexVector advance{1, 0, 0};
  const auto a = fir_field_filter(y, advance);
  for (std::size_t t = 0; t + 1 < y.size(); ++t) CHECK(a[t] == y[t + 1]);
  CHECK(a.back() == Complex{});
  CHECK_THROWS_AS(fir_field_filter(y, ComplexVector(4)), ConfigError);
}

TEST_CASE("CD FIR cascade of +delta and -delta is near identity") {
  FiberParams fiber;
  CdFirDesign design;
  design.taps = 7;
  design.sample_rate = 64e9;
  const double z = fiber.dispersion_length_km(4.25);
  const auto fwd = design_cd_fir(fiber, z, design);
  const auto inv = design_cd_fir(fiber, -z, design);
  // Linear chirp confined to about +/-16 GHz.
  const std::size_t n = 4096;
  ComplexVector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 64e9;
    const double span = static_cast<double>(n) / 64e9;
    x[i] = std::polar(1.0, std::numbers::pi * 32e9 / span * (t - span / 2) * (t - span / 2));
  }
  const auto y = fir_field_filter(fir_field_filter(x, fwd), inv);
  const std::span<const Complex> xi(x.begin() + 16, x.end() - 16), yi(y.begin() + 16, y.end() - 16);
  CHECK(test::evm_db(yi, xi) < -30.0);
  // Response of the forward design approximates the compensation target.
  for (double f : {-15e9, -5e9, 0.0, 10e9}) {
    const double w = 2 * std::numbers::pi * f;
    const Complex want = std::polar(1.0, -0.5 * fiber.beta2() * w * w * z);
    CHECK(std::abs(fir_response(fwd, f, 64e9) - want) < 0.02);
  }
  // Zero dispersion collapses to a unit centre tap.
  const auto id = design_cd_fir(fiber, 0.0, design);
  for (std::size_t c = 0; c < id.size(); ++c) CHECK(std::abs(id[c] - (c == 3 ? 1.0 : 0.0)) < 1e-6);
}

TEST_CASE("branch forward") {
  const EqualizerSpec spec = small_spec(3);
  const auto bank = build_linear_stages(spec);
  const auto block = random_block(spec, 4);
  std::vector<ComplexVector> spectra;
  for (const auto& b : block) spectra.push_back(fft(b));

  SUBCASE("zero power taps give a zero branch") {
    EqualizerParams p = random_params(spec, 5);
    p.alpha.fill(0);
    p.beta.fill(0);
    for (int k = 0; k < spec.total_steps(); ++k)
      for (const auto& v : branch_forward(spectra, k, p, spec, bank)) CHECK(test::max_abs(v) == 0.0);
  }
  SUBCASE("phase covariance") {
    const EqualizerParams p = random_params(spec, 6);
    const Complex rot = std::polar(1.0, 0.7);
    auto rotated = spectra;
    for (auto& s : rotated)
      for (auto& v : s) v *= rot;
    for (int k = 0; k < spec.total_steps(); ++k) {
      const auto a = branch_forward(spectra, k, p, spec, bank);
      const auto b = branch_forward(rotated, k, p, spec, bank);
      for (std::size_t ch = 0; ch < a.size(); ++ch) {
        ComplexVector ar = a[ch];
        for (auto& v : ar) v *= rot;
        CHECK(max_abs_diff(ar, b[ch]) < 1e-12 * (1 + test::max_abs(ar)));
      }
    }
  }
  CHECK_THROWS_AS(branch_forward(spectra, spec.total_steps(), EqualizerParams::zeros(spec), spec, bank), ConfigError);
}

TEST_CASE("single-channel branch matches a direct IVSTF step") {
  EqualizerSpec spec = small_spec(1);
  spec.s_cd = 0;
  spec.delta_cd = 0;
  const auto bank = build_linear_stages(spec);
  const EqualizerParams p = random_params(spec, 7);
  const auto block = random_block(spec, 8);
  const auto n = static_cast<std::size_t>(spec.n_fft);
  const ComplexVector spectrum = fft(block[0]);
  for (int k = 0; k < spec.total_steps(); ++k) {
    const double z = spec.step_distance_km(k);
    const auto pre = stage_response(spec, 0, z, n);
    const auto full = stage_response(spec, 0, spec.total_length_km(), n);
    ComplexVector post(n);
    for (std::size_t i = 0; i < n; ++i) post[i] = full[i] * std::conj(pre[i]);
    ComplexVector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = spectrum[i] * pre[i];
    y = ifft(y);
    const auto row = p.alpha.row({static_cast<std::size_t>(k), 0});
    auto sigma = spm_oracle(y, {row.begin(), row.end()}, spec.fiber.gamma, spec.nonlinear_length_km());
    auto want = fft(sigma);
    for (std::size_t i = 0; i < n; ++i) want[i] *= post[i];
    const auto got = branch_forward({spectrum}, k, p, spec, bank);
    CHECK(max_abs_diff(got[0], want) < 1e-12 * (1 + test::max_abs(want)));
  }
}

TEST_CASE("equalize_block") {
  const EqualizerSpec spec = small_spec(3);
  const auto bank = build_linear_stages(spec);
  const auto block = random_block(spec, 9);
  const auto n = static_cast<std::size_t>(spec.n_fft);

  SUBCASE("zero power taps give linear CD compensation") {
    EqualizerParams p = random_params(spec, 10);
    p.alpha.fill(0);
    p.beta.fill(0);
    const auto out = equalize_block(views(block), p, spec, bank);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      REQUIRE(out[ch].size() == spec.valid_length());
      auto x = fft(block[ch]);
      const auto h = stage_response(spec, channel_offset(ch, 3, spec.spacing), spec.total_length_km(), n,
                                    spec.alignment_shift(static_cast<int>(ch)));
      for (std::size_t i = 0; i < n; ++i) x[i] *= h[i];
      x = ifft(x);
      const std::span<const Complex> want(x.begin() + static_cast<long>(spec.head_discard()), spec.valid_length());
      CHECK(max_abs_diff(out[ch], want) < 1e-12);
    }
  }
  SUBCASE("transform count is N_s + 1 pairs per channel") {
    const EqualizerParams p = random_params(spec, 11);
    fft_counters().reset();
    equalize_block(views(block), p, spec, bank);
    const auto pairs = static_cast<std::size_t>(spec.n_ch * (spec.total_steps() + 1));
    CHECK(fft_counters().forward == pairs);
    CHECK(fft_counters().inverse == pairs);
  }
  SUBCASE("phase covariance of the whole block") {
    const EqualizerParams p = random_params(spec, 12);
    const Complex rot = std::polar(1.0, -1.1);
    auto rotated = block;
    for (auto& b : rotated)
      for (auto& v : b) v *= rot;
    const auto a = equalize_block(views(block), p, spec, bank);
    const auto b = equalize_block(views(rotated), p, spec, bank);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      auto ar = a[ch];
      for (auto& v : ar) v *= rot;
      CHECK(max_abs_diff(ar, b[ch]) < 1e-12);
    }
  }
  SUBCASE("wrong block shapes are rejected") {
    const auto p = EqualizerParams::zeros(spec);
    auto shorter = block;
    shorter[1].resize(n - 1);
    CHECK_THROWS_AS(equalize_block(views(shorter), p, spec, bank), DataError);
    auto fewer = block;
    fewer.pop_back();
    CHECK_THROWS_AS(equalize_block(views(fewer), p, spec, bank), DataError);
    CHECK_THROWS_AS(equalize_block(views(block), EqualizerParams::zeros(small_spec(2)), spec, bank), DataError);
  }
}

TEST_CASE("parameter shape diagnostics name both shapes") {
  const EqualizerSpec spec = small_spec(3);
  EqualizerParams p = EqualizerParams::zeros(spec);
  p.beta = Tensor<double>({4, 3, 1, 7});
  try {
    p.check_shapes(spec);
    FAIL("expected rejection");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[4,3,1,7]") != std::string::npos);
    CHECK(msg.find("[4,3,2,7]") != std::string::npos);
  }
  CHECK(EqualizerParams::zeros(spec).all_finite());
  p = EqualizerParams::zeros(spec);
  p.h_in[0] = Complex(0, std::nan(""));
  CHECK_FALSE(p.all_finite());
}

namespace {

WdmEnsemble make_stream(const EqualizerSpec& spec, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WdmEnsemble ens;
  ens.spacing = spec.spacing;
  ens.baud_rate = spec.baud_rate;
  for (int ch = 0; ch < spec.n_ch; ++ch) {
    SignalGrid g;
    g.sample_rate = spec.sample_rate();
    g.center_offset = channel_offset(static_cast<std::size_t>(ch), static_cast<std::size_t>(spec.n_ch), spec.spacing);
    g.samples = test::bandlimited_field(len, rng, 0.6);
    ens.channels.push_back(std::move(g));
  }
  return ens;
}

}  // namespace

TEST_CASE("overlap-save stream equals whole-signal compensation") {
  EqualizerSpec spec;  // 3 channels, 6 x 100 km, 2048 / 1024
  const std::size_t len = 20000;
  const auto rx = make_stream(spec, len, 13);
  EqualizerParams p = random_params(spec, 14);
  p.alpha.fill(0);
  p.beta.fill(0);
  const auto res = equalize_stream(rx, p, spec);
  CHECK(res.leading_trim + res.trailing_trim == static_cast<std::size_t>(spec.overlap_m - 1));
  const std::size_t pad = 8192;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const auto& out = res.output.channels[ch].samples;
    REQUIRE(out.size() == len - static_cast<std::size_t>(spec.overlap_m - 1));
    ComplexVector big(len + 2 * pad);
    std::copy(rx.channels[ch].samples.begin(), rx.channels[ch].samples.end(), big.begin() + pad);
    fft_inplace(big);
    const double offset = channel_offset(ch, 3, spec.spacing);
    const auto h = stage_response(spec, offset, spec.total_length_km(), big.size());
    for (std::size_t i = 0; i < big.size(); ++i) big[i] *= h[i];
    ifft_inplace(big);
    double err = 0;
    for (std::size_t s = 1024; s + 1024 < out.size(); ++s)
      err = std::max(err, std::abs(out[s] - big[pad + s + res.leading_trim]));
    CHECK(err < 1e-9);
  }
}

TEST_CASE("stream base cases") {
  const EqualizerSpec spec = small_spec(1);
  const auto p = random_params(spec, 15, 0.3);
  SUBCASE("zero input") {
    auto rx = make_stream(spec, 3000, 16);
    for (auto& v : rx.channels[0].samples) v = 0;
    CHECK(test::max_abs(equalize_stream(rx, p, spec).output.channels[0].samples) == 0.0);
  }
  SUBCASE("single block equals equalize_block") {
    const auto rx = make_stream(spec, static_cast<std::size_t>(spec.n_fft), 17);
    const auto res = equalize_stream(rx, p, spec);
    const auto blk = equalize_block({rx.channels[0].samples}, p, spec, build_linear_stages(spec));
    CHECK(res.output.channels[0].samples == blk[0]);
  }
  SUBCASE("too short") {
    const auto rx = make_stream(spec, static_cast<std::size_t>(spec.n_fft) - 1, 18);
    CHECK_THROWS_AS(equalize_stream(rx, p, spec), DataError);
  }
}

TEST_CASE("stream is independent of field filters when power taps are zero") {
  const EqualizerSpec spec = small_spec(3);
  const auto rx = make_stream(spec, 2000, 19);
  EqualizerParams a = random_params(spec, 20), b = random_params(spec, 21);
  for (auto* p : {&a, &b}) {
    p->alpha.fill(0);
    p->beta.fill(0);
  }
  const auto ra = equalize_stream(rx, a, spec), rb = equalize_stream(rx, b, spec);
  for (std::size_t ch = 0; ch < 3; ++ch) CHECK(ra.output.channels[ch].samples == rb.output.channels[ch].samples);
}

TEST_CASE("init_params") {
  EqualizerSpec spec = small_spec(3);
  const auto p = init_params(spec);
  for (double v : p.alpha.data()) CHECK(v == 0.0);
  for (double v : p.beta.data()) CHECK(v == 0.0);
  // h_in * h_out is close to a unit impulse for the 3-tap default
  const auto hi = p.h_in.row({0, 0});
  const auto ho = p.h_out.row({0, 0});
  CHECK(std::abs(hi[1]) > 0.9);
  CHECK(std::abs(ho[1]) > 0.9);
  CHECK(std::abs(hi[0] - ho[0]) > 0.0);
  spec.delta_cd = 0;
  const auto q = init_params(spec);
  for (const auto& t : {q.h_in, q.h_out})
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(t[i] - (i % 3 == 1 ? 1.0 : 0.0)) < 1e-6);
}
