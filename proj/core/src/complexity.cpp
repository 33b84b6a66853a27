// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/complexity.hpp"

#include <bit>
#include <sstream>

#include "felab/errors.hpp"

namespace felab {
namespace {

void validate(const ComplexityConfig& c) {
  if (c.n_ch < 1 || c.steps_per_span < 0 || c.spans < 1 || c.q < 1)
    throw ConfigError("complexity config '" + c.label + "': invalid sizes");
  if (c.s_spm < 0 || c.s_xpm < 0 || c.s_cd < 0) throw ConfigError("complexity config '" + c.label + "': negative tap count");
  if (c.overlap_m < 1 || c.overlap_m >= c.n_fft)
    throw ConfigError("complexity config '" + c.label + "': overlap must be in [1, n_fft)");
}

}  // namespace

ComplexityConfig ComplexityConfig::from_spec(const EqualizerSpec& spec, std::string label) {
  ComplexityConfig c;
  c.label = std::move(label);
  c.n_ch = spec.n_ch;
  c.steps_per_span = spec.steps_per_span;
  c.spans = spec.spans;
  c.s_spm = spec.s_spm;
  c.s_xpm = spec.s_xpm;
  c.s_cd = spec.s_cd;
  c.n_fft = spec.n_fft;
  c.overlap_m = spec.overlap_m;
  c.q = spec.sps;
  return c;
}

double fft_cost(long n_fft) {
  if (n_fft < 2 || !std::has_single_bit(static_cast<unsigned long>(n_fft))) {
    std::ostringstream os;
    os << "fft_cost: " << n_fft << " is not a power of two >= 2";
    throw ConfigError(os.str());
  }
  const auto log2n = std::bit_width(static_cast<unsigned long>(n_fft)) - 1;
  return 4.0 * static_cast<double>(n_fft) * static_cast<double>(log2n);
}

double fd_cost(const ComplexityConfig& c) {
  validate(c);
  const double q = c.q;
  const double ns = c.total_steps();
  const double n = c.n_fft;
  // Numerator is an integer, exactly representable; one rounding overall.
  const double numerator = q * (1.0 + ns) * fft_cost(c.n_fft) + 4.0 * q * n * (2.0 * ns + 1.0);
  return numerator / (n - c.overlap_m + 1.0);
}

double td_cost(const ComplexityConfig& c) {
  validate(c);
  const double per_step = 0.5 * (c.s_spm + 1.0) + (c.n_ch - 1.0) * c.s_xpm + 8.0 * c.s_cd + 4.0;
  return static_cast<double>(c.q) * c.n_ch * c.total_steps() * per_step;
}

ComplexityReport complexity(const ComplexityConfig& c) {
  ComplexityReport r;
  r.config = c;
  r.fd_rm_per_sym = fd_cost(c);
  r.td_rm_per_sym = td_cost(c);
  r.total = r.fd_rm_per_sym + r.td_rm_per_sym;
  return r;
}

ComplexityComparison compare(const ComplexityConfig& fe, const ComplexityConfig& plain) {
  ComplexityComparison out;
  out.fe = complexity(fe);
  out.plain = complexity(plain);
  out.ratio = out.plain.total > 0 ? out.fe.total / out.plain.total : 0.0;
  return out;
}

}  // namespace felab
