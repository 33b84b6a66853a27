// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/metrics.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "felab/errors.hpp"

namespace felab {
namespace {

void check_lengths(std::span<const Complex> a, std::span<const Complex> b, const char* who) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << who << ": " << a.size() << " recovered vs " << b.size() << " reference symbols";
    throw DataError(os.str());
  }
}

}  // namespace

std::string_view to_string(SnrMetric m) { return m == SnrMetric::ber ? "ber" : "evm"; }

SnrMetric snr_metric_from_string(std::string_view name) {
  if (name == "ber") return SnrMetric::ber;
  if (name == "evm") return SnrMetric::evm;
  throw ConfigError("unknown SNR metric '" + std::string(name) + "'");
}

Complex fit_scale(std::span<const Complex> recovered, std::span<const Complex> reference) {
  check_lengths(recovered, reference, "fit_scale");
  Complex num{};
  double den = 0.0;
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    num += std::conj(reference[i]) * recovered[i];
    den += std::norm(reference[i]);
  }
  if (den == 0.0) throw DataError("fit_scale: reference has zero power");
  return num / den;
}

ComplexVector normalize_to_reference(std::span<const Complex> recovered, std::span<const Complex> reference) {
  const Complex a = fit_scale(recovered, reference);
  ComplexVector out(recovered.begin(), recovered.end());
  if (a == Complex{}) return out;
  for (auto& v : out) v /= a;
  return out;
}

double count_ber(std::span<const Complex> recovered, std::span<const Complex> reference, Modulation m) {
  check_lengths(recovered, reference, "count_ber");
  if (recovered.empty()) return 0.0;
  const auto a = slice_symbols(recovered, m);
  const auto b = slice_symbols(reference, m);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) errors += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  return static_cast<double>(errors) / static_cast<double>(a.size() * static_cast<std::size_t>(bits_per_symbol(m)));
}

double qam_ber(double snr_linear, Modulation m) {
  const int bits = bits_per_symbol(m);
  const double big_m = std::pow(2.0, bits);
  const int root = 1 << (bits / 2);
  const int levels_bits = bits / 2;
  const double arg = std::sqrt(3.0 * snr_linear / (2.0 * (big_m - 1.0)));
  double total = 0.0;
  for (int k = 1; k <= levels_bits; ++k) {
    const double pk2 = std::pow(2.0, k - 1);
    const int count = static_cast<int>((1.0 - std::pow(2.0, -k)) * root);
    double acc = 0.0;
    for (int i = 0; i < count; ++i) {
      const double q = std::floor(i * pk2 / root);
      const double sign = (static_cast<long>(q) % 2 == 0) ? 1.0 : -1.0;
      const double weight = pk2 - std::floor(i * pk2 / root + 0.5);
      acc += sign * weight * std::erfc((2.0 * i + 1.0) * arg);
    }
    total += acc / root;
  }
  return total / levels_bits;
}

double ber_to_snr(double ber, Modulation m) {
  if (!(ber > 0.0 && ber < 0.5)) {
    std::ostringstream os;
    os << "ber_to_snr: BER " << ber << " outside (0, 0.5)";
    throw NumericError(os.str());
  }
  double lo = -20.0, hi = 60.0;
  auto ber_at = [m](double db) { return qam_ber(std::pow(10.0, db / 10.0), m); };
  if (ber >= ber_at(lo) || ber <= ber_at(hi)) {
    std::ostringstream os;
    os << "ber_to_snr: BER " << ber << " outside the invertible range";
    throw NumericError(os.str());
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (ber_at(mid) > ber) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double evm_snr(std::span<const Complex> recovered, std::span<const Complex> reference) {
  check_lengths(recovered, reference, "evm_snr");
  double ref_power = 0.0;
  for (const auto& s : reference) ref_power += std::norm(s);
  if (ref_power == 0.0) throw DataError("evm_snr: reference has zero power");
  const auto norm = normalize_to_reference(recovered, reference);
  double err = 0.0;
  for (std::size_t i = 0; i < norm.size(); ++i) err += std::norm(norm[i] - reference[i]);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(err / ref_power);
}

ChannelReport make_report(std::size_t channel, std::span<const Complex> recovered,
                          std::span<const Complex> reference, Modulation m) {
  ChannelReport r;
  r.channel = channel;
  r.symbol_count = recovered.size();
  const auto norm = normalize_to_reference(recovered, reference);
  r.ber = count_ber(norm, reference, m);
  r.snr_eff_db = r.ber > 0.0 ? ber_to_snr(r.ber, m) : std::numeric_limits<double>::infinity();
  r.evm_snr_db = evm_snr(recovered, reference);
  r.evm_db = -r.evm_snr_db;
  return r;
}

double mean_snr_db(const std::vector<ChannelReport>& reports, SnrMetric metric) {
  if (reports.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : reports) acc += r.snr_db(metric);
  return acc / static_cast<double>(reports.size());
}

}  // namespace felab
