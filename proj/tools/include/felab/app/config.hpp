// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Experiment configuration: one JSON document with the sections link, tx,
// eq, train, sweep and complexity. Missing keys take the defaults of
// default_config(); unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "felab/channel.hpp"
#include "felab/complexity.hpp"
#include "felab/dataset.hpp"
#include "felab/equalizer.hpp"
#include "felab/training.hpp"

namespace felab::app {

struct CdPoint {
  int s_cd = 3;
  double delta_cd = 4.25;  // ps/nm
};

struct ExperimentConfig {
  std::string name = "felab";
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "felab-out";

  LinkSpec link;
  TransmitOptions sim;
  TxSpec tx;
  std::vector<double> launch_powers{0.0};

  /// n_ch, baud_rate, spacing, spans and fiber are taken from tx and link.
  EqualizerSpec eq;
  TrainConfig train;

  /// Launch power of the CD filter sweep; the first launch power if unset.
  std::optional<double> sweep_power_dbm;
  std::vector<CdPoint> cd_points;

  std::vector<ComplexityConfig> complexity;
  /// Label pairs (fe, plain) whose cost ratio is reported.
  std::vector<std::pair<std::string, std::string>> comparisons;

  /// Copies the shared fields into eq and validates every section.
  void resolve();
  double cd_sweep_power() const { return sweep_power_dbm.value_or(launch_powers.front()); }
};

ExperimentConfig default_config();

/// Accepts a config document or a run manifest (its "config" member).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved document; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& config);

/// Markdown table of every key with its default and meaning.
std::string config_reference();

}  // namespace felab::app
