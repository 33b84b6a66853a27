// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "felab/cd_fir.hpp"
#include "felab/errors.hpp"

namespace felab {

void TrainConfig::validate(const EqualizerSpec& spec) const {
  if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
  if (batch_blocks < 1) throw ConfigError("train: batch_blocks must be >= 1");
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  const auto block_symbols = static_cast<std::size_t>(spec.n_fft / spec.sps);
  for (auto [name, n] : {std::pair{"train_symbols", train_symbols}, std::pair{"val_symbols", val_symbols},
                         std::pair{"test_symbols", test_symbols}}) {
    if (n < block_symbols) {
      std::ostringstream os;
      os << "train: " << name << " = " << n << " is smaller than one block (" << block_symbols << " symbols)";
      throw ConfigError(os.str());
    }
  }
}

void Dataset::validate(const EqualizerSpec& spec) const {
  rx.validate();
  if (rx.size() != static_cast<std::size_t>(spec.n_ch) || reference.size() != rx.size()) {
    std::ostringstream os;
    os << "dataset has " << rx.size() << " channels and " << reference.size()
       << " reference streams; equalizer expects " << spec.n_ch;
    throw DataError(os.str());
  }
  for (std::size_t ch = 0; ch < rx.size(); ++ch) {
    if (rx.channels[ch].size() != reference[ch].size() * static_cast<std::size_t>(spec.sps))
      throw DataError("dataset: waveform length is not sps times the symbol count");
    if (std::abs(rx.channels[ch].sample_rate - spec.sample_rate()) > 1e-6 * spec.sample_rate())
      throw DataError("dataset: waveform sample rate differs from the equalizer rate");
  }
}

BlockPlan::BlockPlan(const EqualizerSpec& spec, std::size_t period)
    : period_(period),
      n_fft_(static_cast<std::size_t>(spec.n_fft)),
      head_(spec.head_discard()),
      valid_(spec.valid_length()),
      sps_(static_cast<std::size_t>(spec.sps)),
      blocks_((period + valid_ - 1) / valid_) {
  if (period < n_fft_) throw DataError("block plan: record shorter than one block");
  for (int ch = 0; ch < spec.n_ch; ++ch) shift_.push_back(spec.alignment_shift(ch));
}

std::vector<ComplexVector> BlockPlan::gather(const WdmEnsemble& rx, std::size_t block) const {
  std::vector<ComplexVector> out(rx.size(), ComplexVector(n_fft_));
  const std::size_t start = (block * valid_ + period_ - head_ % period_) % period_;
  for (std::size_t ch = 0; ch < rx.size(); ++ch) {
    const auto& src = rx.channels[ch].samples;
    for (std::size_t i = 0; i < n_fft_; ++i) out[ch][i] = src[(start + i) % period_];
  }
  return out;
}

std::vector<BlockPlan::Slot> BlockPlan::symbol_slots(std::size_t block, std::size_t channel) const {
  std::vector<Slot> slots;
  const std::size_t first = block * valid_;
  const auto p = static_cast<long>(period_);
  const long shift = ((shift_.at(channel) % p) + p) % p;
  for (std::size_t i = 0; i < valid_ && first + i < period_; ++i) {
    const std::size_t pos = (first + i + static_cast<std::size_t>(shift)) % period_;
    if (pos % sps_ == 0) slots.push_back({i, pos / sps_});
  }
  return slots;
}

double mse_loss(const std::vector<ComplexVector>& recovered, const std::vector<ComplexVector>& reference) {
  if (recovered.size() != reference.size() || recovered.empty())
    throw DataError("mse_loss: channel count mismatch");
  const std::size_t k = recovered.front().size();
  double acc = 0.0;
  for (std::size_t ch = 0; ch < recovered.size(); ++ch) {
    if (recovered[ch].size() != k || reference[ch].size() != k) throw DataError("mse_loss: symbol count mismatch");
    for (std::size_t i = 0; i < k; ++i) acc += std::norm(recovered[ch][i] - reference[ch][i]);
  }
  if (k == 0) return 0.0;
  return acc / static_cast<double>(recovered.size() * k);
}

TrainingPipeline::TrainingPipeline(EqualizerSpec spec, double rolloff)
    : spec_(std::move(spec)),
      stages_(build_linear_stages(spec_)),
      matched_(rrc_response(static_cast<std::size_t>(spec_.n_fft), spec_.sample_rate(), spec_.baud_rate, rolloff)) {}

ForwardTape TrainingPipeline::forward(const Dataset& data, std::span<const std::size_t> blocks,
                                      const EqualizerParams& params, bool record) const {
  params.check_shapes(spec_);
  const BlockPlan plan(spec_, data.rx.channels.front().size());
  const auto n_ch = static_cast<std::size_t>(spec_.n_ch);
  ForwardTape tape;
  tape.recovered.assign(n_ch, {});
  tape.reference.assign(n_ch, {});
  for (std::size_t b : blocks) {
    if (b >= plan.block_count()) throw DataError("forward: block index out of range");
    const auto buffers = plan.gather(data.rx, b);
    std::vector<std::span<const Complex>> views(buffers.begin(), buffers.end());
    detail::BlockRecord rec;
    const auto out = detail::run_block(views, params, spec_, stages_, matched_, record ? &rec : nullptr);
    std::vector<std::vector<BlockPlan::Slot>> slots(n_ch);
    for (std::size_t ch = 0; ch < n_ch; ++ch) {
      slots[ch] = plan.symbol_slots(b, ch);
      for (const auto& s : slots[ch]) {
        tape.recovered[ch].push_back(out[ch][s.local]);
        tape.reference[ch].push_back(data.reference[ch][s.symbol]);
      }
    }
    tape.blocks.push_back(b);
    tape.slots.push_back(std::move(slots));
    if (record) tape.records.push_back(std::move(rec));
  }
  // Per-channel least-squares scale c minimising |c r - s|^2.
  std::vector<ComplexVector> fitted(n_ch);
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    Complex num{};
    double den = 0.0;
    for (std::size_t i = 0; i < tape.recovered[ch].size(); ++i) {
      num += std::conj(tape.recovered[ch][i]) * tape.reference[ch][i];
      den += std::norm(tape.recovered[ch][i]);
    }
    const Complex c = den > 0 ? num / den : Complex{};
    tape.fit.push_back(c);
    fitted[ch] = tape.recovered[ch];
    for (auto& v : fitted[ch]) v *= c;
  }
  tape.loss = mse_loss(fitted, tape.reference);
  tape.recorded = record;
  return tape;
}

double TrainingPipeline::loss(const Dataset& data, std::span<const std::size_t> blocks,
                              const EqualizerParams& params) const {
  return forward(data, blocks, params, false).loss;
}

GradientSet TrainingPipeline::backward(const ForwardTape& tape, const EqualizerParams& params) const {
  if (!tape.recorded || tape.records.size() != tape.blocks.size())
    throw DataError("backward: no recorded forward graph");
  GradientSet grads = EqualizerParams::zeros(spec_);
  const auto n_ch = static_cast<std::size_t>(spec_.n_ch);
  const std::size_t k = tape.recovered.front().size();
  if (k == 0) return grads;
  // The scale fit is stationary in c, so dL/dr only sees c held fixed.
  const double scale = 2.0 / static_cast<double>(n_ch * k);
  std::vector<std::size_t> offset(n_ch, 0);
  for (std::size_t b = 0; b < tape.blocks.size(); ++b) {
    std::vector<ComplexVector> grad_valid(n_ch, ComplexVector(spec_.valid_length()));
    for (std::size_t ch = 0; ch < n_ch; ++ch) {
      const auto& slots = tape.slots[b][ch];
      const Complex c = tape.fit[ch];
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const Complex r = tape.recovered[ch][offset[ch] + i];
        const Complex s = tape.reference[ch][offset[ch] + i];
        grad_valid[ch][slots[i].local] = scale * std::conj(c) * (c * r - s);
      }
      offset[ch] += slots.size();
    }
    detail::backward_block(tape.records[b], grad_valid, params, spec_, stages_, matched_, grads);
  }
  return grads;
}

std::vector<ComplexVector> TrainingPipeline::recover(const Dataset& data, const EqualizerParams& params) const {
  const BlockPlan plan(spec_, data.rx.channels.front().size());
  std::vector<std::size_t> all(plan.block_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const ForwardTape tape = forward(data, all, params, false);
  std::vector<ComplexVector> out(tape.recovered.size(), ComplexVector(data.symbols()));
  std::vector<std::size_t> offset(out.size(), 0);
  for (const auto& block : tape.slots) {
    for (std::size_t ch = 0; ch < out.size(); ++ch) {
      for (std::size_t i = 0; i < block[ch].size(); ++i)
        out[ch][block[ch][i].symbol] = tape.recovered[ch][offset[ch] + i];
      offset[ch] += block[ch].size();
    }
  }
  return out;
}

std::vector<ChannelReport> TrainingPipeline::evaluate(const Dataset& data, const EqualizerParams& params) const {
  data.validate(spec_);
  const auto rec = recover(data, params);
  std::vector<ChannelReport> reports;
  for (std::size_t ch = 0; ch < rec.size(); ++ch)
    reports.push_back(make_report(ch, rec[ch], data.reference[ch], data.modulation));
  return reports;
}

AdamState AdamState::zeros_like(const EqualizerParams& p) {
  AdamState s;
  s.m.alpha = Tensor<double>(p.alpha.shape());
  s.m.beta = Tensor<double>(p.beta.shape());
  s.m.h_in = Tensor<Complex>(p.h_in.shape());
  s.m.h_out = Tensor<Complex>(p.h_out.shape());
  s.v_alpha = Tensor<double>(p.alpha.shape());
  s.v_beta = Tensor<double>(p.beta.shape());
  s.v_h_in = Tensor<double>(p.h_in.shape());
  s.v_h_out = Tensor<double>(p.h_out.shape());
  return s;
}

void adam_update(std::span<double> x, std::span<const double> g, std::span<double> m, std::span<double> v,
                 long step, const AdamOptions& opt) {
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
    x[i] -= opt.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt.epsilon);
  }
}

void adam_update(std::span<Complex> x, std::span<const Complex> g, std::span<Complex> m, std::span<double> v,
                 long step, const AdamOptions& opt) {
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * std::norm(g[i]);
    x[i] -= opt.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt.epsilon);
  }
}

void adam_step(EqualizerParams& params, const GradientSet& grads, AdamState& state, const AdamOptions& opt) {
  if (grads.alpha.shape() != params.alpha.shape() || grads.beta.shape() != params.beta.shape() ||
      grads.h_in.shape() != params.h_in.shape() || grads.h_out.shape() != params.h_out.shape())
    throw DataError("adam_step: gradient shapes differ from parameters");
  ++state.step;
  adam_update(params.alpha.data(), grads.alpha.data(), state.m.alpha.data(), state.v_alpha.data(), state.step, opt);
  adam_update(params.beta.data(), grads.beta.data(), state.m.beta.data(), state.v_beta.data(), state.step, opt);
  adam_update(params.h_in.data(), grads.h_in.data(), state.m.h_in.data(), state.v_h_in.data(), state.step, opt);
  adam_update(params.h_out.data(), grads.h_out.data(), state.m.h_out.data(), state.v_h_out.data(), state.step, opt);
}

EqualizerParams init_params(const EqualizerSpec& spec) {
  spec.validate();
  EqualizerParams p = EqualizerParams::zeros(spec);
  if (spec.s_cd == 0) return p;
  CdFirDesign design;
  design.taps = static_cast<std::size_t>(spec.s_cd);
  design.sample_rate = spec.sample_rate();
  design.passband = std::min(spec.n_ch > 1 ? spec.spacing / 2 : spec.baud_rate, spec.sample_rate() / 2);
  const double z = spec.delegated_length_km();
  const ComplexVector fwd = design_cd_fir(spec.fiber, z, design);
  const ComplexVector inv = design_cd_fir(spec.fiber, -z, design);
  for (std::size_t k = 0; k < static_cast<std::size_t>(spec.total_steps()); ++k) {
    for (std::size_t ch = 0; ch < static_cast<std::size_t>(spec.n_ch); ++ch) {
      std::ranges::copy(fwd, p.h_in.row({k, ch}).begin());
      std::ranges::copy(inv, p.h_out.row({k, ch}).begin());
    }
  }
  return p;
}

TrainResult run_training(const Dataset& train, const Dataset& val, const EqualizerSpec& spec,
                         const TrainConfig& config, double rolloff,
                         const std::function<void(const HistoryRow&)>& on_epoch) {
  spec.validate();
  config.validate(spec);
  train.validate(spec);
  val.validate(spec);
  const TrainingPipeline pipeline(spec, rolloff);
  const BlockPlan plan(spec, train.rx.channels.front().size());

  TrainResult result;
  result.initial = init_params(spec);
  EqualizerParams params = result.initial;
  AdamState state = AdamState::zeros_like(params);
  AdamOptions opt;
  opt.learning_rate = config.learning_rate;

  std::vector<std::size_t> order(plan.block_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_blocks);

  auto batch_loss_mean = [&](const EqualizerParams& p) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      acc += pipeline.loss(train, std::span(order).subspan(start, end - start), p);
      ++count;
    }
    return acc / static_cast<double>(count);
  };
  auto validation_row = [&](int epoch, double train_loss, const EqualizerParams& p) {
    HistoryRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    const auto reports = pipeline.evaluate(val, p);
    for (const auto& r : reports) row.val_snr_db.push_back(r.snr_db(config.val_metric));
    row.mean_val_snr_db = mean_snr_db(reports, config.val_metric);
    return row;
  };

  const double initial_loss = batch_loss_mean(params);
  HistoryRow row0 = validation_row(0, initial_loss, params);
  result.params = params;
  result.best_epoch = 0;
  result.best_val_snr_db = row0.mean_val_snr_db;
  result.history.push_back(row0);
  if (on_epoch) on_epoch(row0);

  int diverging = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double acc = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const ForwardTape tape = pipeline.forward(train, std::span(order).subspan(start, end - start), params);
      if (!std::isfinite(tape.loss)) throw NumericError("training: non-finite loss");
      const GradientSet grads = pipeline.backward(tape, params);
      adam_step(params, grads, state, opt);
      acc += tape.loss;
      ++batches;
    }
    const double train_loss = acc / static_cast<double>(batches);
    if (!params.all_finite()) throw NumericError("training: parameters became non-finite");
    diverging = train_loss > config.divergence_factor * initial_loss ? diverging + 1 : 0;
    if (diverging >= config.divergence_patience) {
      std::ostringstream os;
      os << "training diverged: loss " << train_loss << " > " << config.divergence_factor << " x initial "
         << initial_loss << " for " << diverging << " epochs (epoch " << epoch << ")";
      throw NumericError(os.str());
    }
    HistoryRow row = validation_row(epoch, train_loss, params);
    if (row.mean_val_snr_db > result.best_val_snr_db) {
      result.best_val_snr_db = row.mean_val_snr_db;
      result.best_epoch = epoch;
      result.params = params;
    }
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

}  // namespace felab
