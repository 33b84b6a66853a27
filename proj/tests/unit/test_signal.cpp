// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include <bit>
#include <numeric>

#include "doctest.h"
#include "felab/errors.hpp"
#include "felab/signal.hpp"
#include "test_support.hpp"

using namespace felab;
using felab::test::evm_db;
using felab::test::max_abs_diff;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1);
  return bits;
}

SymbolFrame random_frame(std::size_t n, Modulation m, std::uint64_t seed, double baud = 32e9) {
  return map_symbols(random_bits(n * bits_per_symbol(m), seed), m, baud);
}

}  // namespace

TEST_CASE("fft round trip and Parseval") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {8u, 1000u, 2048u}) {
    const auto x = test::random_field(n, rng);
    const auto X = fft(x);
    CHECK(max_abs_diff(ifft(X), x) < 1e-12);
    double pt = 0.0, pf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pt += std::norm(x[i]);
      pf += std::norm(X[i]);
    }
    CHECK(std::abs(pf / static_cast<double>(n) - pt) < 1e-9 * pt);
  }
}

TEST_CASE("fft_frequencies uses signed bins") {
  const auto f = fft_frequencies(4, 8.0);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 2.0);
  CHECK(f[2] == -4.0);
  CHECK(f[3] == -2.0);
}

TEST_CASE("constellations have unit energy and Gray labels") {
  for (auto m : {Modulation::qpsk, Modulation::qam16, Modulation::qam64}) {
    const auto& c = constellation(m);
    REQUIRE(c.size() == static_cast<std::size_t>(constellation_size(m)));
    double e = 0.0;
    for (const auto& s : c) e += std::norm(s);
    CHECK(e / static_cast<double>(c.size()) == doctest::Approx(1.0).epsilon(1e-14));
    // nearest neighbours differ in exactly one bit
    double dmin = 1e9;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) dmin = std::min(dmin, std::abs(c[i] - c[j]));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j)
        if (std::abs(c[i] - c[j]) < dmin * 1.0001) CHECK(std::popcount(i ^ j) == 1);
    CHECK(modulation_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(modulation_from_string("qam8"), ConfigError);
}

TEST_CASE("map_symbols reference points") {
  const std::vector<std::uint8_t> two{0, 0};
  const auto q = map_symbols(two, Modulation::qpsk, 1.0);
  CHECK(std::abs(q.symbols[0] - Complex(1, 1) / std::sqrt(2.0)) < 1e-15);

  const std::vector<std::uint8_t> six(6, 0);
  const auto s = map_symbols(six, Modulation::qam64, 1.0);
  CHECK(std::abs(s.symbols[0] - Complex(7, 7) / std::sqrt(42.0)) < 1e-15);
  CHECK(std::norm(s.symbols[0]) == doctest::Approx(98.0 / 42.0));
}

TEST_CASE("map_symbols rejects partial symbols") {
  const std::vector<std::uint8_t> bits(7, 0);
  try {
    map_symbols(bits, Modulation::qam64, 1.0);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find('7') != std::string::npos);
  }
}

TEST_CASE("demap inverts map") {
  for (auto m : {Modulation::qpsk, Modulation::qam16, Modulation::qam64}) {
    const auto bits = random_bits(600 * bits_per_symbol(m), 9);
    const auto frame = map_symbols(bits, m, 1.0);
    CHECK(demap_symbols(frame.symbols, m) == bits);
  }
}

TEST_CASE("shape, matched filter and decimate is an identity") {
  const auto frame = random_frame(4096, Modulation::qam64, 1);
  for (int sps : {2, 4}) {
    const auto wave = shape_pulses(frame, sps, 0.1);
    CHECK(wave.sample_rate == doctest::Approx(sps * 32e9));
    CHECK(wave.power() == doctest::Approx(1.0 / sps).epsilon(0.03));
    const auto mf = matched_filter(wave, frame.baud_rate, 0.1);
    const auto rec = decimate(mf.samples, static_cast<std::size_t>(sps));
    CHECK(max_abs_diff(rec, frame.symbols) < 1e-6);
  }
}

TEST_CASE("single impulse produces the RRC pulse") {
  SymbolFrame frame;
  frame.baud_rate = 32e9;
  frame.symbols.assign(1024, Complex{});
  frame.symbols[0] = 1.0;
  const int sps = 4;
  const auto wave = shape_pulses(frame, sps, 0.1);
  const auto taps = rrc_taps(wave.size(), wave.sample_rate, frame.baud_rate, 0.1);
  CHECK(max_abs_diff(wave.samples, taps) < 1e-12);
  const std::size_t n = wave.size();
  double err = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    for (long sgn : {1L, -1L}) {
      const std::size_t idx = sgn > 0 ? i : (n - i) % n;
      const double t = static_cast<double>(sgn) * static_cast<double>(i) / wave.sample_rate;
      const double want = rrc_pulse(t, frame.baud_rate, 0.1, sps);
      err = std::max(err, std::abs(wave.samples[idx] - want));
      peak = std::max(peak, std::abs(want));
    }
  }
  CHECK(err < 1e-3 * peak);
}

TEST_CASE("shaped spectrum is confined to the RRC band") {
  const auto taps = rrc_taps(4096, 128e9, 32e9, 0.1);
  const auto spec = fft(taps);
  const auto freqs = fft_frequencies(4096, 128e9);
  double peak = 0.0, out = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    peak = std::max(peak, std::abs(spec[k]));
    if (std::abs(freqs[k]) >= 1.1 / 2 * 32e9 * 1.0001) out = std::max(out, std::abs(spec[k]));
  }
  CHECK(20 * std::log10(out / peak + 1e-300) < -40.0);
}

TEST_CASE("raised cosine folds to one") {
  for (double f : {0.0, 3e9, 15e9, 16e9, 17.2e9}) {
    const double sum = raised_cosine_spectrum(f, 32e9, 0.1) + raised_cosine_spectrum(f - 32e9, 32e9, 0.1);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("shape_pulses parameter checks") {
  const auto frame = random_frame(16, Modulation::qpsk, 2);
  CHECK_THROWS_AS(shape_pulses(frame, 1, 0.1), ConfigError);
  CHECK_THROWS_AS(shape_pulses(frame, 2, 0.0), ConfigError);
  CHECK_THROWS_AS(shape_pulses(frame, 2, 1.5), ConfigError);
  CHECK_NOTHROW(shape_pulses(frame, 2, 1.0));
}

TEST_CASE("matched filter on zero and delta inputs") {
  SignalGrid zero;
  zero.sample_rate = 64e9;
  zero.samples.assign(512, Complex{});
  CHECK(test::max_abs(matched_filter(zero, 32e9, 0.1).samples) == 0.0);

  SignalGrid delta = zero;
  delta.samples[0] = 1.0;
  const auto out = matched_filter(delta, 32e9, 0.1);
  CHECK(max_abs_diff(out.samples, rrc_taps(512, 64e9, 32e9, 0.1)) < 1e-14);
}

TEST_CASE("matched filter shapes white noise into a raised-cosine autocorrelation") {
  const std::size_t n = std::size_t{1} << 20;
  std::mt19937_64 rng(5);
  SignalGrid noise;
  noise.sample_rate = 128e9;
  noise.samples = test::random_field(n, rng);
  const auto out = matched_filter(noise, 32e9, 0.1);
  // Empirical circular autocorrelation through the FFT.
  auto spec = fft(out.samples);
  for (auto& v : spec) v = std::norm(v);
  const auto acf = ifft(spec);
  // Expected: inverse transform of |H|^2 = sps * RC.
  const auto h = rrc_response(n, noise.sample_rate, 32e9, 0.1);
  ComplexVector rc(n);
  for (std::size_t k = 0; k < n; ++k) rc[k] = h[k] * h[k];
  const auto want = ifft(rc);
  for (std::size_t lag : {1u, 2u, 3u, 4u, 6u, 8u}) {
    const double got = acf[lag].real() / acf[0].real();
    const double exp = want[lag].real() / want[0].real();
    CHECK(std::abs(got - exp) < 0.01);
  }
}

TEST_CASE("resample round trip") {
  std::mt19937_64 rng(8);
  SignalGrid g;
  g.sample_rate = 64e9;
  g.samples = test::bandlimited_field(1024, rng, 0.5);
  const auto up = resample(g, 256e9);
  CHECK(up.size() == 4096);
  CHECK(up.power() == doctest::Approx(g.power()).epsilon(1e-9));
  const auto back = resample(up, 64e9);
  CHECK(max_abs_diff(back.samples, g.samples) < 1e-12);
  CHECK_THROWS_AS(resample(g, 64.1e9), ConfigError);
}

namespace {

WdmEnsemble make_ensemble(std::size_t n_ch, std::size_t symbols, std::uint64_t seed) {
  WdmEnsemble ens;
  ens.spacing = 40e9;
  ens.baud_rate = 32e9;
  for (std::size_t i = 0; i < n_ch; ++i) {
    auto g = shape_pulses(random_frame(symbols, Modulation::qam64, seed + i), 2, 0.1);
    g.center_offset = channel_offset(i, n_ch, ens.spacing);
    ens.channels.push_back(std::move(g));
  }
  return ens;
}

}  // namespace

TEST_CASE("single channel mux is an upsampled copy") {
  const auto ens = make_ensemble(1, 1024, 1);
  const auto wide = mux(ens, 256e9, 0.1);
  const auto up = resample(ens.channels[0], 256e9);
  CHECK(max_abs_diff(fft(wide.samples), fft(up.samples)) < 1e-9);
}

TEST_CASE("two orthogonal channels add their powers") {
  WdmEnsemble ens = make_ensemble(2, 2048, 4);
  ens.channels[1].samples = ens.channels[0].samples;
  const auto wide = mux(ens, 256e9, 0.1);
  CHECK(ens.channels[0].center_offset == doctest::Approx(-20e9));
  CHECK(wide.power() == doctest::Approx(2.0 * ens.channels[0].power()).epsilon(1e-9));
}

TEST_CASE("mux and demux round trip") {
  for (std::size_t n_ch : {3u, 11u}) {
    const auto ens = make_ensemble(n_ch, 2048, 10);
    const double rate = n_ch == 3 ? 256e9 : 512e9;
    const auto wide = mux(ens, rate, 0.1);
    FrequencyPlan plan{n_ch, 40e9, 32e9, 0.0};
    const auto back = demux(wide, plan, 2);
    REQUIRE(back.size() == n_ch);
    for (std::size_t i = 0; i < n_ch; ++i) {
      CHECK(back.channels[i].center_offset == doctest::Approx(ens.channels[i].center_offset));
      CHECK(evm_db(back.channels[i].samples, ens.channels[i].samples) < -40.0);
    }
  }
}

TEST_CASE("mux rejects an aliasing rate") {
  const auto ens = make_ensemble(3, 256, 1);
  try {
    mux(ens, 128e9, 0.1);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("required") != std::string::npos);
  }
}

TEST_CASE("demux edge cases") {
  SignalGrid empty;
  empty.sample_rate = 256e9;
  CHECK(demux(empty, FrequencyPlan{3, 40e9, 32e9, 0.0}, 2).size() == 0);

  SignalGrid g;
  g.sample_rate = 256e9;
  g.samples.assign(1024, Complex{});
  CHECK_THROWS_AS(demux(g, FrequencyPlan{3, 40e9, 32e9, 50e9}, 2), ConfigError);
}

TEST_CASE("a tone at a channel centre stays in that channel") {
  const std::size_t n = 8192;
  const double fs = 256e9;
  const std::size_t n_ch = 5;
  for (std::size_t target = 0; target < n_ch; ++target) {
    const double f0 = channel_offset(target, n_ch, 40e9) + 1e9;
    SignalGrid g;
    g.sample_rate = fs;
    g.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.samples[i] = std::polar(1.0, 2 * M_PI * f0 * static_cast<double>(i) / fs);
    const auto ens = demux(g, FrequencyPlan{n_ch, 40e9, 32e9, 0.0}, 2);
    const double p_in = ens.channels[target].power();
    CHECK(p_in > 0.5);
    for (std::size_t i = 0; i < n_ch; ++i)
      if (i != target) CHECK(10 * std::log10(ens.channels[i].power() / p_in + 1e-300) < -60.0);
  }
}
