// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/cd_fir.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "felab/errors.hpp"

namespace felab {

ComplexVector design_cd_fir(const FiberParams& fiber, double distance_km, const CdFirDesign& design) {
  if (design.taps % 2 != 1) throw ConfigError("design_cd_fir: tap count must be odd");
  if (design.grid_points < static_cast<int>(design.taps)) throw ConfigError("design_cd_fir: grid too coarse");
  const auto taps = static_cast<Eigen::Index>(design.taps);
  const auto half = taps / 2;
  const int points = design.grid_points;
  const double beta2 = fiber.beta2();

  Eigen::MatrixXcd a(points, taps);
  Eigen::VectorXcd target(points);
  for (int p = 0; p < points; ++p) {
    const double f = -design.passband + 2.0 * design.passband * (p + 0.5) / points;
    const double w = 2.0 * std::numbers::pi * f;
    target(p) = std::polar(1.0, -0.5 * beta2 * w * w * distance_km);
    for (Eigen::Index c = -half; c <= half; ++c)
      a(p, c + half) = std::polar(1.0, -w * static_cast<double>(c) / design.sample_rate);
  }
  Eigen::MatrixXcd normal = a.adjoint() * a;
  normal.diagonal().array() += design.regularization * points;
  const Eigen::VectorXcd h = normal.ldlt().solve(a.adjoint() * target);
  return ComplexVector(h.data(), h.data() + h.size());
}

Complex fir_response(const ComplexVector& taps, double f, double sample_rate) {
  const auto half = static_cast<long>(taps.size() / 2);
  Complex acc{};
  for (long c = -half; c <= half; ++c)
    acc += taps[static_cast<std::size_t>(c + half)] *
           std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(c) / sample_rate);
  return acc;
}

}  // namespace felab
