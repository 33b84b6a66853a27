// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Transmitter and receiver chain around the link simulator: random Gray QAM
// symbols per channel, RRC shaping, transmit(), then demultiplexing to the
// equalizer rate.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "felab/channel.hpp"
#include "felab/signal.hpp"
#include "felab/training.hpp"

namespace felab {

struct TxSpec {
  int n_ch = 3;
  Modulation modulation = Modulation::qam64;
  double baud_rate = 32e9;
  double spacing = 40e9;
  double rolloff = 0.1;
  /// Samples per symbol of the shaped channel waveforms before muxing.
  int tx_sps = 2;
  void validate() const;
};

/// Uniform random symbols for every channel; stream `ch` uses its own
/// derived seed so channel count changes leave other channels untouched.
std::vector<SymbolFrame> random_symbols(const TxSpec& tx, std::size_t symbols, std::uint64_t seed);

/// Shapes the frames into a WDM ensemble on the ensemble frequency plan.
WdmEnsemble shape_ensemble(const TxSpec& tx, const std::vector<SymbolFrame>& frames);

/// Full chain for one launch power: symbols, shaping, link, demux to
/// rx_sps samples per symbol.
Dataset simulate_dataset(const TxSpec& tx, const LinkSpec& link, double launch_power_dbm, std::size_t symbols,
                         std::uint64_t seed, const TransmitOptions& options, int rx_sps = 2);

/// Directory layout: dataset.json, rx<ch>.{bin,json} waveforms and
/// ref<ch>.{bin,json} reference symbols.
void write_dataset(const std::filesystem::path& dir, const Dataset& data, std::uint64_t seed);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace felab
