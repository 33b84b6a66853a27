// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace felab {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (size, direction) and reused.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(std::span<Complex> data, int sign) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_cache().get(data.size(), sign), buf, buf);
}

}  // namespace

FftCounters& fft_counters() {
  thread_local FftCounters counters;
  return counters;
}

void fft_inplace(std::span<Complex> data) {
  execute(data, FFTW_FORWARD);
  ++fft_counters().forward;
}

void ifft_inplace(std::span<Complex> data) {
  execute(data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
  ++fft_counters().inverse;
}

ComplexVector fft(std::span<const Complex> data) {
  ComplexVector out(data.begin(), data.end());
  fft_inplace(out);
  return out;
}

ComplexVector ifft(std::span<const Complex> data) {
  ComplexVector out(data.begin(), data.end());
  ifft_inplace(out);
  return out;
}

std::vector<double> fft_frequencies(std::size_t n, double sample_rate) {
  std::vector<double> f(n);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<double>(k);
    f[k] = (2 * k < n) ? kk * df : (kk - static_cast<double>(n)) * df;
  }
  return f;
}

}  // namespace felab
