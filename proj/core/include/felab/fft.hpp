// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace felab {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// Forward transform is unnormalized, inverse carries the 1/N factor, so
// x == ifft(fft(x)) and x(t) = sum_k X_k exp(+j 2 pi k t / N).
void fft_inplace(std::span<Complex> data);
void ifft_inplace(std::span<Complex> data);

ComplexVector fft(std::span<const Complex> data);
ComplexVector ifft(std::span<const Complex> data);

/// Signed bin frequencies in Hz for an n-point transform at the given rate.
/// Bin n/2 of an even-length grid maps to -rate/2.
std::vector<double> fft_frequencies(std::size_t n, double sample_rate);

/// Per-thread transform counters, used to verify FFT placement.
struct FftCounters {
  std::size_t forward = 0;
  std::size_t inverse = 0;
  void reset() { forward = inverse = 0; }
};

FftCounters& fft_counters();

}  // namespace felab
