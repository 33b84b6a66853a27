// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// End-to-end training. The recorded pipeline per block is
//   equalizer -> RRC matched filter (fused into the last FD stage)
//   -> 1 sample/symbol -> per-channel complex scale fit -> MSE.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "felab/equalizer.hpp"
#include "felab/equalizer_graph.hpp"
#include "felab/metrics.hpp"

namespace felab {

/// Same tensors as the parameters. Real tensors hold dL/dx, complex tensors
/// hold dL/dRe + j dL/dIm.
using GradientSet = EqualizerParams;

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_blocks = 40;
  int epochs = 750;
  std::size_t train_symbols = std::size_t{1} << 19;
  std::size_t val_symbols = std::size_t{1} << 18;
  std::size_t test_symbols = std::size_t{1} << 18;
  std::uint64_t seed = 1;
  double launch_power_dbm = 0.0;
  SnrMetric val_metric = SnrMetric::ber;
  double divergence_factor = 10.0;
  int divergence_patience = 5;

  void validate(const EqualizerSpec& spec) const;
};

/// Received channels at the equalizer rate plus the transmitted symbols.
/// The waveform is one period of a periodic signal (as produced by the
/// simulator), which the block plan wraps around.
struct Dataset {
  WdmEnsemble rx;
  std::vector<ComplexVector> reference;
  Modulation modulation = Modulation::qam64;

  std::size_t symbols() const { return reference.empty() ? 0 : reference.front().size(); }
  void validate(const EqualizerSpec& spec) const;
};

/// Circular framing of a periodic record into overlap-save blocks. Block j
/// produces raw output positions [j L_v, (j+1) L_v) clipped to the period;
/// for channel ch these are record samples shifted by alignment_shift(ch).
class BlockPlan {
 public:
  BlockPlan(const EqualizerSpec& spec, std::size_t period);

  std::size_t block_count() const { return blocks_; }
  std::size_t period() const { return period_; }
  std::vector<ComplexVector> gather(const WdmEnsemble& rx, std::size_t block) const;

  struct Slot {
    std::size_t local;   // index in the block's valid output
    std::size_t symbol;  // symbol index in the record
  };
  std::vector<Slot> symbol_slots(std::size_t block, std::size_t channel) const;

 private:
  std::size_t period_, n_fft_, head_, valid_, sps_, blocks_;
  std::vector<long> shift_;
};

double mse_loss(const std::vector<ComplexVector>& recovered, const std::vector<ComplexVector>& reference);

struct ForwardTape {
  bool recorded = false;
  std::vector<std::size_t> blocks;
  std::vector<detail::BlockRecord> records;
  std::vector<std::vector<std::vector<BlockPlan::Slot>>> slots;  // [block][channel]
  std::vector<ComplexVector> recovered;  // raw symbols per channel, batch order
  std::vector<ComplexVector> reference;
  std::vector<Complex> fit;              // per-channel scale applied before the loss
  double loss = 0.0;
};

class TrainingPipeline {
 public:
  TrainingPipeline(EqualizerSpec spec, double rolloff);

  const EqualizerSpec& spec() const { return spec_; }
  const LinearStageBank& stages() const { return stages_; }

  ForwardTape forward(const Dataset& data, std::span<const std::size_t> blocks, const EqualizerParams& params,
                      bool record = true) const;
  double loss(const Dataset& data, std::span<const std::size_t> blocks, const EqualizerParams& params) const;

  /// Throws DataError for a tape that was not recorded.
  GradientSet backward(const ForwardTape& tape, const EqualizerParams& params) const;

  /// Raw recovered symbols per channel for the whole record, symbol order.
  std::vector<ComplexVector> recover(const Dataset& data, const EqualizerParams& params) const;
  std::vector<ChannelReport> evaluate(const Dataset& data, const EqualizerParams& params) const;

 private:
  EqualizerSpec spec_;
  LinearStageBank stages_;
  std::vector<double> matched_;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  EqualizerParams m;
  Tensor<double> v_alpha, v_beta, v_h_in, v_h_out;
  long step = 0;

  static AdamState zeros_like(const EqualizerParams& params);
};

/// One bias-corrected Adam update on raw coordinates; `step` is the 1-based
/// index of this update.
void adam_update(std::span<double> x, std::span<const double> g, std::span<double> m, std::span<double> v,
                 long step, const AdamOptions& opt);
/// Complex coordinates: first moment on g, second moment on |g|^2.
void adam_update(std::span<Complex> x, std::span<const Complex> g, std::span<Complex> m, std::span<double> v,
                 long step, const AdamOptions& opt);

void adam_step(EqualizerParams& params, const GradientSet& grads, AdamState& state, const AdamOptions& opt);

/// SPM/XPM taps zero, field FIRs set to least-squares designs for +/- the
/// delegated dispersion.
EqualizerParams init_params(const EqualizerSpec& spec);

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  std::vector<double> val_snr_db;
  double mean_val_snr_db = 0.0;
};

struct TrainResult {
  EqualizerParams params;  // best validation parameters
  EqualizerParams initial;
  std::vector<HistoryRow> history;
  int best_epoch = 0;
  double best_val_snr_db = 0.0;
};

TrainResult run_training(const Dataset& train, const Dataset& val, const EqualizerSpec& spec,
                         const TrainConfig& config, double rolloff,
                         const std::function<void(const HistoryRow&)>& on_epoch = {});

}  // namespace felab
