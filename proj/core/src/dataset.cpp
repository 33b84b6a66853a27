// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/dataset.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "felab/errors.hpp"
#include "felab/waveform_io.hpp"

namespace felab {

void TxSpec::validate() const {
  if (n_ch < 1) throw ConfigError("tx: n_ch must be >= 1");
  if (!(baud_rate > 0)) throw ConfigError("tx: baud_rate must be positive");
  if (n_ch > 1 && !(spacing > 0)) throw ConfigError("tx: spacing must be positive");
  if (!(rolloff > 0 && rolloff <= 1)) throw ConfigError("tx: rolloff must be in (0, 1]");
  if (tx_sps < 2) throw ConfigError("tx: tx_sps must be >= 2");
}

std::vector<SymbolFrame> random_symbols(const TxSpec& tx, std::size_t symbols, std::uint64_t seed) {
  tx.validate();
  const auto bps = static_cast<std::size_t>(bits_per_symbol(tx.modulation));
  std::vector<SymbolFrame> frames;
  for (int ch = 0; ch < tx.n_ch; ++ch) {
    std::mt19937_64 rng(derive_seed(seed, 0xb175 + static_cast<std::uint64_t>(ch)));
    std::vector<std::uint8_t> bits(symbols * bps);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    frames.push_back(map_symbols(bits, tx.modulation, tx.baud_rate));
  }
  return frames;
}

WdmEnsemble shape_ensemble(const TxSpec& tx, const std::vector<SymbolFrame>& frames) {
  WdmEnsemble ens;
  ens.spacing = tx.spacing;
  ens.baud_rate = tx.baud_rate;
  for (std::size_t ch = 0; ch < frames.size(); ++ch) {
    SignalGrid g = shape_pulses(frames[ch], tx.tx_sps, tx.rolloff);
    g.center_offset = channel_offset(ch, frames.size(), tx.spacing);
    ens.channels.push_back(std::move(g));
  }
  return ens;
}

Dataset simulate_dataset(const TxSpec& tx, const LinkSpec& link, double launch_power_dbm, std::size_t symbols,
                         std::uint64_t seed, const TransmitOptions& options, int rx_sps) {
  const auto frames = random_symbols(tx, symbols, seed);
  const WdmEnsemble ens = shape_ensemble(tx, frames);
  TransmitOptions opts = options;
  opts.rolloff = tx.rolloff;
  const SignalGrid rx = transmit(ens, link, launch_power_dbm, derive_seed(seed, 0x11ab), opts);
  FrequencyPlan plan;
  plan.n_ch = static_cast<std::size_t>(tx.n_ch);
  plan.spacing = tx.n_ch > 1 ? tx.spacing : rx_sps * tx.baud_rate;
  plan.baud_rate = tx.baud_rate;
  Dataset data;
  data.rx = demux(rx, plan, rx_sps);
  data.rx.spacing = tx.spacing;
  data.modulation = tx.modulation;
  for (const auto& f : frames) data.reference.push_back(f.symbols);
  return data;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["format"] = "felab-dataset";
  j["version"] = 1;
  j["n_ch"] = data.rx.size();
  j["symbols"] = data.symbols();
  j["modulation"] = std::string(to_string(data.modulation));
  j["spacing"] = data.rx.spacing;
  j["baud_rate"] = data.rx.baud_rate;
  j["seed"] = seed;
  {
    std::ofstream os(dir / "dataset.json");
    if (!os) throw DataError("cannot write " + (dir / "dataset.json").string());
    os << j.dump(2) << '\n';
  }
  for (std::size_t ch = 0; ch < data.rx.size(); ++ch) {
    WaveformHeader h;
    h.baud_rate = data.rx.baud_rate;
    h.seed = seed;
    write_waveform(dir / ("rx" + std::to_string(ch)), data.rx.channels[ch], h);
    SymbolFrame f{data.reference[ch], data.modulation, data.rx.baud_rate};
    write_symbols(dir / ("ref" + std::to_string(ch)), f, seed);
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto meta_path = dir / "dataset.json";
  std::ifstream is(meta_path);
  if (!is) throw DataError("no dataset at " + dir.string() + " (missing dataset.json)");
  nlohmann::json j;
  Dataset data;
  std::size_t n_ch = 0, symbols = 0;
  try {
    is >> j;
    n_ch = j.at("n_ch").get<std::size_t>();
    symbols = j.at("symbols").get<std::size_t>();
    data.modulation = modulation_from_string(j.at("modulation").get<std::string>());
    data.rx.spacing = j.at("spacing").get<double>();
    data.rx.baud_rate = j.at("baud_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + meta_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    data.rx.channels.push_back(read_waveform(dir / ("rx" + std::to_string(ch))));
    SymbolFrame f = read_symbols(dir / ("ref" + std::to_string(ch)));
    if (f.symbols.size() != symbols)
      throw DataError(dir.string() + ": reference " + std::to_string(ch) + " has " + std::to_string(f.symbols.size()) +
                      " symbols, dataset.json declares " + std::to_string(symbols));
    data.reference.push_back(std::move(f.symbols));
  }
  return data;
}

}  // namespace felab
