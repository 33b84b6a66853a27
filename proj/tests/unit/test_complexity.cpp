// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include <cstdint>

#include "doctest.h"
#include "felab/complexity.hpp"
#include "felab/errors.hpp"

using namespace felab;

namespace {

ComplexityConfig config(int n_ch, int stps, int s_cd) {
  ComplexityConfig c;
  c.n_ch = n_ch;
  c.steps_per_span = stps;
  c.s_cd = s_cd;
  return c;
}

std::int64_t log2_exact(std::int64_t n) {
  std::int64_t k = 0;
  while ((std::int64_t{1} << k) < n) ++k;
  return k;
}

}  // namespace

TEST_CASE("FFT cost") {
  CHECK(fft_cost(2048) == 90112);
  CHECK(fft_cost(2) == 8);
  CHECK(fft_cost(1024) == 40960);
  CHECK_THROWS_AS(fft_cost(1000), ConfigError);
  CHECK_THROWS_AS(fft_cost(1), ConfigError);
}

TEST_CASE("frequency- and time-domain costs") {
  const auto c = config(9, 2, 3);
  CHECK(fd_cost(c) == doctest::Approx(2685.38).epsilon(1e-6));
  CHECK(fd_cost(c) == (2.0 * 13 * 90112 + 8.0 * 2048 * 25) / 1025.0);
  CHECK(td_cost(c) == 60480);
  auto cdc = c;
  cdc.steps_per_span = 0;
  CHECK(fd_cost(cdc) == (2.0 * 90112 + 8.0 * 2048) / 1025.0);
  CHECK(td_cost(cdc) == 0);
  auto one = config(1, 2, 3);
  auto one_wide = one;
  one_wide.s_xpm = 101;
  CHECK(td_cost(one) == td_cost(one_wide));
  auto plain = c;
  plain.s_cd = 0;
  CHECK(td_cost(plain) == 2.0 * 9 * 12 * (4 + 248 + 4));
  // fd_cost does not depend on the channel count
  CHECK(fd_cost(config(1, 2, 3)) == fd_cost(config(9, 2, 3)));
  auto big = c;
  big.n_fft = 4096;
  CHECK(fd_cost(big) != fd_cost(c));
  CHECK(fd_cost(big) == doctest::Approx((2.0 * 13 * 4 * 4096 * 12 + 8.0 * 4096 * 25) / 3073.0));
}

TEST_CASE("cost formulas match integer evaluation on a grid") {
  int cases = 0;
  for (int n_ch : {1, 3, 5, 9})
    for (int ns : {1, 2, 4, 6, 12}) {
      ComplexityConfig c;
      c.n_ch = n_ch;
      c.spans = 1;
      c.steps_per_span = ns;
      c.s_spm = 2 * (n_ch % 4) + 3;
      c.s_xpm = 4 * ns + 1;
      c.s_cd = ns % 3 == 0 ? 0 : 2 * ns + 1;
      c.n_fft = 1 << (9 + ns % 4);
      c.overlap_m = c.n_fft / 2 - ns;
      c.q = 1 + n_ch % 2;
      const std::int64_t q = c.q, n = c.n_fft;
      const std::int64_t num = q * (1 + ns) * 4 * n * log2_exact(n) + 4 * q * n * (2 * ns + 1);
      const std::int64_t den = n - c.overlap_m + 1;
      CHECK(fd_cost(c) == static_cast<double>(num) / static_cast<double>(den));
      // 0.5 (S_SPM + 1) is exact in halves
      const std::int64_t twice = (c.s_spm + 1) + 2 * (n_ch - 1) * c.s_xpm + 16 * c.s_cd + 8;
      CHECK(td_cost(c) == static_cast<double>(q * n_ch * ns * twice) / 2.0);
      const auto r = complexity(c);
      CHECK(r.total == r.fd_rm_per_sym + r.td_rm_per_sym);
      CHECK(r.fd_rm_per_sym >= 0);
      ++cases;
    }
  CHECK(cases == 20);
}

TEST_CASE("reference configuration ratios") {
  const auto nine = compare(config(9, 2, 3), config(9, 4, 0));
  CHECK(std::abs(nine.ratio - 0.5455) < 0.005);
  CHECK(nine.fe.total == doctest::Approx(63165.38).epsilon(1e-7));
  const auto three = compare(config(3, 1, 3), config(3, 4, 0));
  CHECK(std::abs(three.ratio - 0.3151) < 0.01);
  CHECK(three.fe.total == doctest::Approx(1474560.0 / 1025 + 3384).epsilon(1e-12));
  const auto same = compare(config(3, 1, 3), config(3, 1, 3));
  CHECK(same.ratio == 1.0);
}

TEST_CASE("configuration from an equalizer spec") {
  EqualizerSpec s;
  s.n_ch = 5;
  s.steps_per_span = 3;
  const auto c = ComplexityConfig::from_spec(s, "x");
  CHECK(c.label == "x");
  CHECK(c.n_ch == 5);
  CHECK(c.total_steps() == 18);
  CHECK(c.q == 2);
  auto bad = c;
  bad.overlap_m = bad.n_fft;
  CHECK_THROWS_AS(fd_cost(bad), ConfigError);
  bad = c;
  bad.s_xpm = -1;
  CHECK_THROWS_AS(td_cost(bad), ConfigError);
}
