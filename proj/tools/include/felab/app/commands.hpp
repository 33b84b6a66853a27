// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Experiment commands. Every command writes below config.output_dir:
//
//   data/<power>/{train,val,test}/      simulate (sweeps create missing ones)
//   models/<power>/model.felab          train, sweep-power
//   models/<power>/history.csv
//   eval/<power>/report.csv, snr.svg    evaluate, sweep-power
//   sweep-power/summary.csv, snr.svg
//   sweep-cdlen/<point>/model.felab, history.csv
//   sweep-cdlen/summary.csv, snr.svg
//   complexity/costs.csv, ratios.csv, costs.svg
//   manifest-<mode>.json                resolved config and output hashes
//
// <power> is the launch power tag, e.g. "p+0.00dBm".

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "felab/app/config.hpp"
#include "felab/metrics.hpp"

namespace felab::app {

inline constexpr std::string_view kModes[] = {"simulate",    "train",       "evaluate",
                                              "sweep-power", "sweep-cdlen", "complexity"};

/// Progress messages go to stderr unless disabled.
void set_logging(bool enabled);

std::string power_tag(double dbm);

struct PowerPoint {
  double launch_power_dbm = 0.0;
  std::vector<ChannelReport> cdc;
  std::vector<ChannelReport> trained;
  int best_epoch = 0;
};

struct CdPointResult {
  CdPoint point;
  double cdc_snr_db = 0.0;
  double trained_snr_db = 0.0;
};

struct CommandResult {
  std::string mode;
  /// Files written, relative to the output directory, sorted.
  std::vector<std::filesystem::path> outputs;
  std::vector<PowerPoint> powers;     // evaluate, sweep-power
  std::vector<CdPointResult> cd;      // sweep-cdlen
  std::vector<ComplexityReport> costs;
  std::vector<ComplexityComparison> ratios;
};

/// Runs one mode and writes manifest-<mode>.json. Throws ConfigError for an
/// unknown mode.
CommandResult run_command(std::string_view mode, const ExperimentConfig& config);

}  // namespace felab::app
