// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Forward link simulation. The scalar NLSE is
//   dA/dz = -(alpha/2) A - j (beta2/2) d^2A/dt^2 + j gamma |A|^2 A
// in the group-velocity frame of the ensemble centre, solved by the symmetric
// split-step Fourier method on one wideband grid.

#pragma once

#include <cstdint>
#include <random>

#include "felab/signal.hpp"

namespace felab {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;      // J s
inline constexpr double kCarrierFrequency = 193.4e12;  // Hz

struct FiberParams {
  double dispersion = 17.0;          // D, ps/(nm km)
  double gamma = 1.3;                // 1/(W km)
  double alpha_db = 0.2;             // dB/km
  double length_km = 100.0;          // span length
  double ref_wavelength_nm = 1550.0;

  /// beta2 in s^2/km, negative for anomalous dispersion (D > 0).
  double beta2() const;
  /// Power attenuation in 1/km.
  double alpha() const;
  /// (1 - exp(-alpha L)) / alpha for the span length, or for `length` km.
  double effective_length_km() const { return effective_length_km(length_km); }
  double effective_length_km(double length) const;
  /// Length whose dispersion equals `ps_per_nm` (ps/nm) of accumulated CD.
  double dispersion_length_km(double ps_per_nm) const;
  void validate() const;
};

struct LinkSpec {
  int spans = 6;
  FiberParams fiber;
  double edfa_nf_db = 4.5;
  double edfa_gain_db = 20.0;

  double total_length_km() const { return spans * fiber.length_km; }
  /// Rejects a gain that does not exactly undo the span loss.
  void validate() const;
  /// Link with edfa_gain_db set from the fiber loss.
  static LinkSpec matched(int spans, const FiberParams& fiber, double nf_db);
};

enum class StepCheck { ignore, warn, reject };

struct SsfmOptions {
  double step_km = 0.1;
  bool nonlinear = true;
  StepCheck step_check = StepCheck::warn;
  double max_step_phase = 0.05;  // rad, at peak power
};

/// Propagates over fiber.length_km with the symmetric split-step scheme.
SignalGrid ssfm_propagate(const SignalGrid& field, const FiberParams& fiber, const SsfmOptions& options);

/// One-sided ASE power spectral density per polarisation, W/Hz:
/// (G - 1) F h nu / 2.
double ase_psd(double gain_db, double nf_db, double carrier_hz = kCarrierFrequency);

/// Amplifies and adds white circular Gaussian ASE over the full grid
/// bandwidth (noise power per sample = psd * sample_rate).
SignalGrid edfa(const SignalGrid& field, double gain_db, double nf_db, std::mt19937_64& rng,
                double carrier_hz = kCarrierFrequency);

struct TransmitOptions {
  double sim_rate = 512e9;  // Hz
  double rolloff = 0.1;
  bool noise = true;
  SsfmOptions ssfm;
};

/// Scales every channel to the launch power (per channel, dBm; -inf gives
/// zero power), multiplexes them and runs the span loop. Returns the
/// received wideband field.
SignalGrid transmit(const WdmEnsemble& ensemble, const LinkSpec& link, double launch_power_dbm,
                    std::uint64_t seed, const TransmitOptions& options = {});

double dbm_to_watts(double dbm);

/// Derived independent stream seed (splitmix64 mix of seed and tag).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace felab
