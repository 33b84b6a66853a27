// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "felab/errors.hpp"
#include "felab/param_bundle.hpp"
#include "test_support.hpp"

using namespace felab;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "felab_test_bundle";
  fs::create_directories(dir);
  return dir / name;
}

EqualizerParams filled(const EqualizerSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto p = EqualizerParams::zeros(spec);
  for (auto& v : p.alpha.data()) v = g(rng);
  for (auto& v : p.beta.data()) v = g(rng);
  for (auto& v : p.h_in.data()) v = {g(rng), g(rng)};
  for (auto& v : p.h_out.data()) v = {g(rng), g(rng)};
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_CASE("bundle round trip is exact") {
  EqualizerSpec spec;
  spec.n_ch = 3;
  spec.spans = 2;
  spec.s_xpm = 9;
  spec.band_hz = 19e9;
  spec.placement = StepPlacement::power_centroid;
  spec.fiber.gamma = 1.2;
  const auto params = filled(spec, 4);
  const auto path = temp_path("a.felab");
  write_bundle(path, spec, params);
  const auto back = read_bundle(path);
  CHECK(back.params == params);
  CHECK(spec_to_json(back.spec) == spec_to_json(spec));
  CHECK(back.spec.placement == StepPlacement::power_centroid);
  CHECK(back.spec.fiber.gamma == 1.2);
  CHECK(back.spec.band_hz == 19e9);
  // a second write is byte-identical
  const auto path2 = temp_path("b.felab");
  write_bundle(path2, back.spec, back.params);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("bundle rejects bad input") {
  EqualizerSpec spec;
  spec.spans = 1;
  const auto params = filled(spec, 5);
  const auto path = temp_path("c.felab");
  write_bundle(path, spec, params);
  const std::string bytes = slurp(path);

  CHECK_THROWS_AS(read_bundle(temp_path("missing.felab")), DataError);
  {
    std::ofstream os(temp_path("trunc.felab"), std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
  }
  CHECK_THROWS_AS(read_bundle(temp_path("trunc.felab")), DataError);
  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream os(temp_path("magic.felab"), std::ios::binary);
    os << bad;
  }
  CHECK_THROWS_AS(read_bundle(temp_path("magic.felab")), DataError);
  {
    std::string bad = bytes;
    bad[8] = 9;  // version
    std::ofstream os(temp_path("version.felab"), std::ios::binary);
    os << bad;
  }
  CHECK_THROWS_AS(read_bundle(temp_path("version.felab")), DataError);

  auto wrong = EqualizerParams::zeros(spec);
  wrong.alpha = Tensor<double>({1, 3, 5});
  try {
    write_bundle(temp_path("shape.felab"), spec, wrong);
    FAIL("shape mismatch accepted");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1,3,5]") != std::string::npos);
    CHECK(msg.find("[1,3,7]") != std::string::npos);
  }
}

TEST_CASE("spec JSON overrides only the given fields") {
  EqualizerSpec defaults;
  defaults.spans = 4;
  const auto s = spec_from_json(R"({"n_ch": 5, "fiber": {"gamma_per_w_km": 2.0}})", defaults);
  CHECK(s.n_ch == 5);
  CHECK(s.spans == 4);
  CHECK(s.fiber.gamma == 2.0);
  CHECK(s.fiber.length_km == defaults.fiber.length_km);
  CHECK_THROWS_AS(spec_from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"n_ch": "three"})"), ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"placement": "edge"})"), ConfigError);
  const auto f = fiber_from_json(fiber_to_json(defaults.fiber));
  CHECK(f.dispersion == defaults.fiber.dispersion);
  CHECK(f.alpha_db == defaults.fiber.alpha_db);
}
