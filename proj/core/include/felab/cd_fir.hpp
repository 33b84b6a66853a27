// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#pragma once

#include <cstddef>

#include "felab/channel.hpp"
#include "felab/fft.hpp"

namespace felab {

struct CdFirDesign {
  std::size_t taps = 7;
  double sample_rate = 64e9;
  /// Half-width of the fitted band, Hz.
  double passband = 20e9;
  int grid_points = 512;
  /// Tikhonov weight relative to the number of grid points.
  double regularization = 1e-8;
};

/// Regularised least-squares FIR whose response (tap taps/2 at t = 0)
/// approximates exp(-j beta2/2 w^2 z) over the passband. Positive
/// distance_km compensates that much fiber, negative adds it back.
ComplexVector design_cd_fir(const FiberParams& fiber, double distance_km, const CdFirDesign& design);

/// sum_c taps[c+h] exp(-j w c / fs) at frequency f.
Complex fir_response(const ComplexVector& taps, double f, double sample_rate);

}  // namespace felab
