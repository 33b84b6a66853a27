// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "felab/app/report.hpp"
#include "felab/errors.hpp"
#include "felab/param_bundle.hpp"

namespace felab::app {
namespace {

namespace fs = std::filesystem;

bool g_logging = true;

void log(const std::string& msg) {
  if (g_logging) std::cerr << "felab: " << msg << '\n';
}

std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

enum class Split { train = 1, val = 2, test = 3 };

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::size_t split_symbols(const ExperimentConfig& c, Split s) {
  switch (s) {
    case Split::train: return c.train.train_symbols;
    case Split::val: return c.train.val_symbols;
    case Split::test: return c.train.test_symbols;
  }
  return 0;
}

std::uint64_t split_seed(const ExperimentConfig& c, double dbm, Split s) {
  const auto milli = static_cast<std::uint32_t>(static_cast<std::int32_t>(std::llround(dbm * 1000)));
  return derive_seed(c.seed, (static_cast<std::uint64_t>(s) << 32) | milli);
}

class Outputs {
 public:
  explicit Outputs(fs::path root) : root_(std::move(root)) {}
  const fs::path& root() const { return root_; }

  void add(const fs::path& file) { files_.insert(fs::relative(file, root_)); }
  void add_tree(const fs::path& dir) {
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) add(e.path());
  }
  void write(const fs::path& rel, std::string_view text) {
    write_text(root_ / rel, text);
    add(root_ / rel);
  }
  void csv(const fs::path& rel, const CsvTable& t) { write(rel, to_csv(t)); }
  std::vector<fs::path> sorted() const { return {files_.begin(), files_.end()}; }

 private:
  fs::path root_;
  std::set<fs::path> files_;
};

fs::path data_dir(const fs::path& out, double dbm, Split s) { return out / "data" / power_tag(dbm) / split_name(s); }

Dataset simulate_split(const ExperimentConfig& c, double dbm, Split s, Outputs& out) {
  const auto dir = data_dir(out.root(), dbm, s);
  const auto seed = split_seed(c, dbm, s);
  log("simulating " + std::string(split_name(s)) + " set at " + fixed(dbm) + " dBm (" +
      std::to_string(split_symbols(c, s)) + " symbols)");
  auto data = simulate_dataset(c.tx, c.link, dbm, split_symbols(c, s), seed, c.sim, c.eq.sps);
  fs::remove_all(dir);
  write_dataset(dir, data, seed);
  out.add_tree(dir);
  return data;
}

Dataset load_split(const ExperimentConfig& c, double dbm, Split s, Outputs& out, bool simulate_missing) {
  const auto dir = data_dir(out.root(), dbm, s);
  if (!fs::exists(dir / "dataset.json")) {
    if (simulate_missing) return simulate_split(c, dbm, s, out);
    throw DataError("no " + std::string(split_name(s)) + " dataset for " + fixed(dbm) + " dBm at " + dir.string() +
                    "; run `felab simulate` with the same config and --out first");
  }
  auto data = read_dataset(dir);
  if (data.symbols() != split_symbols(c, s) || data.rx.size() != static_cast<std::size_t>(c.tx.n_ch))
    throw DataError("dataset at " + dir.string() + " does not match the config (" +
                    std::to_string(data.rx.size()) + " channels x " + std::to_string(data.symbols()) +
                    " symbols); re-run `felab simulate`");
  data.validate(c.eq);
  if (simulate_missing) out.add_tree(dir);
  return data;
}

CsvTable history_table(const TrainResult& r, int n_ch) {
  CsvTable t;
  t.header = {"epoch", "train_loss"};
  for (int ch = 0; ch < n_ch; ++ch) t.header.push_back("val_snr_db_ch" + std::to_string(ch));
  t.header.push_back("mean_val_snr_db");
  for (const auto& h : r.history) {
    std::vector<std::string> row{std::to_string(h.epoch), format_number(h.train_loss)};
    for (double v : h.val_snr_db) row.push_back(format_number(v));
    row.push_back(format_number(h.mean_val_snr_db));
    t.rows.push_back(std::move(row));
  }
  return t;
}

TrainResult train_point(const ExperimentConfig& c, const EqualizerSpec& eq, double dbm, const Dataset& train,
                        const Dataset& val, const fs::path& rel_dir, Outputs& out) {
  TrainConfig tc = c.train;
  tc.launch_power_dbm = dbm;
  tc.validate(eq);
  log("training at " + fixed(dbm) + " dBm: S_CD=" + std::to_string(eq.s_cd) + ", delta=" + fixed(eq.delta_cd, 3) +
      " ps/nm, " + std::to_string(tc.epochs) + " epochs");
  auto result = run_training(train, val, eq, tc, c.tx.rolloff, [&](const HistoryRow& h) {
    if (h.epoch % 10 == 0 || h.epoch == tc.epochs)
      log("  epoch " + std::to_string(h.epoch) + ": loss " + format_number(h.train_loss) + ", val SNR " +
          fixed(h.mean_val_snr_db, 3) + " dB");
  });
  log("  best epoch " + std::to_string(result.best_epoch) + ", val SNR " + fixed(result.best_val_snr_db, 3) + " dB");
  std::error_code ec;
  fs::create_directories(out.root() / rel_dir, ec);
  if (ec) throw DataError("cannot create " + (out.root() / rel_dir).string() + ": " + ec.message());
  write_bundle(out.root() / rel_dir / "model.felab", eq, result.params);
  out.add(out.root() / rel_dir / "model.felab");
  out.csv(rel_dir / "history.csv", history_table(result, eq.n_ch));
  return result;
}

void append_report(CsvTable& t, const std::string& model, const std::vector<ChannelReport>& reports) {
  for (const auto& r : reports)
    t.rows.push_back({model, std::to_string(r.channel), format_number(r.ber), format_number(r.snr_eff_db),
                      format_number(r.evm_db), format_number(r.evm_snr_db), std::to_string(r.symbol_count)});
}

void write_eval(const ExperimentConfig& c, const PowerPoint& p, const fs::path& rel_dir, Outputs& out) {
  CsvTable t;
  t.header = {"model", "channel", "ber", "snr_eff_db", "evm_db", "evm_snr_db", "symbols"};
  append_report(t, "cdc", p.cdc);
  if (!p.trained.empty()) append_report(t, "fe-livstf", p.trained);
  out.csv(rel_dir / "report.csv", t);

  const SnrMetric m = c.train.val_metric;
  LineChart chart{"Per-channel SNR at " + fixed(p.launch_power_dbm) + " dBm", "channel",
                  m == SnrMetric::ber ? "effective SNR (dB)" : "EVM SNR (dB)", {}};
  auto series = [&](const std::string& name, const std::vector<ChannelReport>& reports) {
    Series s{name, {}, {}};
    for (const auto& r : reports) {
      s.x.push_back(static_cast<double>(r.channel));
      s.y.push_back(r.snr_db(m));
    }
    chart.series.push_back(std::move(s));
  };
  series("CDC", p.cdc);
  if (!p.trained.empty()) series(std::to_string(c.eq.n_ch) + "x" + std::to_string(c.eq.n_ch) + " FE L-IVSTF", p.trained);
  out.write(rel_dir / "snr.svg", render_svg(chart));
}

PowerPoint evaluate_point(const ExperimentConfig& c, const EqualizerSpec& eq, double dbm, const Dataset& test,
                          const EqualizerParams& params, const std::vector<ChannelReport>* cdc = nullptr) {
  params.check_shapes(eq);
  TrainingPipeline pipe(eq, c.tx.rolloff);
  PowerPoint p;
  p.launch_power_dbm = dbm;
  p.cdc = cdc ? *cdc : pipe.evaluate(test, EqualizerParams::zeros(eq));
  p.trained = pipe.evaluate(test, params);
  const SnrMetric m = c.train.val_metric;
  log("test SNR at " + fixed(dbm) + " dBm: CDC " + fixed(mean_snr_db(p.cdc, m), 3) + " dB, trained " +
      fixed(mean_snr_db(p.trained, m), 3) + " dB");
  return p;
}

ParamBundle load_model(const ExperimentConfig& c, double dbm, const Outputs& out) {
  const auto path = out.root() / "models" / power_tag(dbm) / "model.felab";
  if (!fs::exists(path))
    throw DataError("no trained model for " + fixed(dbm) + " dBm at " + path.string() +
                    "; run `felab train` with the same config and --out first");
  auto bundle = read_bundle(path);
  bundle.params.check_shapes(c.eq);
  return bundle;
}

void cmd_simulate(const ExperimentConfig& c, Outputs& out, CommandResult&) {
  for (double p : c.launch_powers)
    for (Split s : {Split::train, Split::val, Split::test}) simulate_split(c, p, s, out);
}

void cmd_train(const ExperimentConfig& c, Outputs& out, CommandResult&) {
  for (double p : c.launch_powers) {
    const auto train = load_split(c, p, Split::train, out, false);
    const auto val = load_split(c, p, Split::val, out, false);
    train_point(c, c.eq, p, train, val, fs::path("models") / power_tag(p), out);
  }
}

void cmd_evaluate(const ExperimentConfig& c, Outputs& out, CommandResult& result) {
  for (double p : c.launch_powers) {
    const auto bundle = load_model(c, p, out);
    const auto test = load_split(c, p, Split::test, out, false);
    auto point = evaluate_point(c, c.eq, p, test, bundle.params);
    write_eval(c, point, fs::path("eval") / power_tag(p), out);
    result.powers.push_back(std::move(point));
  }
}

void write_power_summary(const ExperimentConfig& c, const std::vector<PowerPoint>& points, Outputs& out) {
  const SnrMetric m = c.train.val_metric;
  CsvTable t;
  t.header = {"launch_power_dbm", "metric", "cdc_snr_db", "trained_snr_db", "gain_db", "best_epoch"};
  Series cdc{"CDC", {}, {}}, fe{std::to_string(c.eq.n_ch) + "x" + std::to_string(c.eq.n_ch) + " FE L-IVSTF", {}, {}};
  for (const auto& p : points) {
    const double a = mean_snr_db(p.cdc, m), b = mean_snr_db(p.trained, m);
    t.rows.push_back({format_number(p.launch_power_dbm), std::string(to_string(m)), format_number(a),
                      format_number(b), format_number(b - a), std::to_string(p.best_epoch)});
    cdc.x.push_back(p.launch_power_dbm);
    cdc.y.push_back(a);
    fe.x.push_back(p.launch_power_dbm);
    fe.y.push_back(b);
  }
  out.csv("sweep-power/summary.csv", t);
  LineChart chart{"Average SNR versus launch power", "launch power per channel (dBm)", "average SNR (dB)",
                  {cdc, fe}};
  out.write("sweep-power/snr.svg", render_svg(chart));
}

void cmd_sweep_power(const ExperimentConfig& c, Outputs& out, CommandResult& result) {
  for (double p : c.launch_powers) {
    const auto train = load_split(c, p, Split::train, out, true);
    const auto val = load_split(c, p, Split::val, out, true);
    const auto test = load_split(c, p, Split::test, out, true);
    const auto trained = train_point(c, c.eq, p, train, val, fs::path("models") / power_tag(p), out);
    auto point = evaluate_point(c, c.eq, p, test, trained.params);
    point.best_epoch = trained.best_epoch;
    write_eval(c, point, fs::path("eval") / power_tag(p), out);
    result.powers.push_back(std::move(point));
  }
  write_power_summary(c, result.powers, out);
}

std::string cd_tag(const CdPoint& p) { return "s" + std::to_string(p.s_cd) + "-d" + fixed(p.delta_cd, 3); }

void cmd_sweep_cdlen(const ExperimentConfig& c, Outputs& out, CommandResult& result) {
  if (c.cd_points.empty()) throw ConfigError("sweep.cd_filters is empty; sweep-cdlen needs at least one point");
  const double p = c.cd_sweep_power();
  const auto train = load_split(c, p, Split::train, out, true);
  const auto val = load_split(c, p, Split::val, out, true);
  const auto test = load_split(c, p, Split::test, out, true);
  const SnrMetric m = c.train.val_metric;
  const auto cdc = TrainingPipeline(c.eq, c.tx.rolloff).evaluate(test, EqualizerParams::zeros(c.eq));

  CsvTable t;
  t.header = {"s_cd", "delta_cd_ps_nm", "launch_power_dbm", "metric", "cdc_snr_db", "trained_snr_db", "best_epoch"};
  for (const auto& cp : c.cd_points) {
    EqualizerSpec eq = c.eq;
    eq.s_cd = cp.s_cd;
    eq.delta_cd = cp.delta_cd;
    eq.validate();
    const fs::path rel = fs::path("sweep-cdlen") / cd_tag(cp);
    const auto trained = train_point(c, eq, p, train, val, rel, out);
    auto point = evaluate_point(c, eq, p, test, trained.params, &cdc);
    point.best_epoch = trained.best_epoch;
    write_eval(c, point, rel, out);
    const CdPointResult r{cp, mean_snr_db(cdc, m), mean_snr_db(point.trained, m)};
    t.rows.push_back({std::to_string(cp.s_cd), format_number(cp.delta_cd), format_number(p),
                      std::string(to_string(m)), format_number(r.cdc_snr_db), format_number(r.trained_snr_db),
                      std::to_string(trained.best_epoch)});
    result.cd.push_back(r);
    result.powers.push_back(std::move(point));
  }
  out.csv("sweep-cdlen/summary.csv", t);

  LineChart chart{"Average SNR versus CD FIR length at " + fixed(p) + " dBm", "S_CD (taps)", "average SNR (dB)", {}};
  std::vector<double> deltas;
  for (const auto& r : result.cd)
    if (std::find(deltas.begin(), deltas.end(), r.point.delta_cd) == deltas.end()) deltas.push_back(r.point.delta_cd);
  for (double d : deltas) {
    Series s{"delta = " + fixed(d, 3) + " ps/nm", {}, {}};
    for (const auto& r : result.cd)
      if (r.point.delta_cd == d) {
        s.x.push_back(r.point.s_cd);
        s.y.push_back(r.trained_snr_db);
      }
    chart.series.push_back(std::move(s));
  }
  out.write("sweep-cdlen/snr.svg", render_svg(chart));
}

void cmd_complexity(const ExperimentConfig& c, Outputs& out, CommandResult& result) {
  if (c.complexity.empty()) throw ConfigError("complexity.configs is empty");
  CsvTable costs;
  costs.header = {"label",         "n_ch",          "steps_per_span", "spans",           "s_spm",
                  "s_xpm",         "s_cd",          "n_fft",          "overlap_m",       "q",
                  "fd_rm_per_sym", "td_rm_per_sym", "total_rm_per_sym", "reported_total", "gap_rm_per_sym",
                  "gap_rel"};
  BarChart chart{"Computational cost per symbol", "real multiplications per symbol", {}, {}};
  Series computed{"computed", {}, {}}, reported{"reported", {}, {}};
  bool any_reported = false;
  for (const auto& k : c.complexity) {
    const auto r = complexity(k);
    std::vector<std::string> row{k.label,
                                 std::to_string(k.n_ch),
                                 std::to_string(k.steps_per_span),
                                 std::to_string(k.spans),
                                 std::to_string(k.s_spm),
                                 std::to_string(k.s_xpm),
                                 std::to_string(k.s_cd),
                                 std::to_string(k.n_fft),
                                 std::to_string(k.overlap_m),
                                 std::to_string(k.q),
                                 format_number(r.fd_rm_per_sym),
                                 format_number(r.td_rm_per_sym),
                                 format_number(r.total)};
    if (k.reported_total) {
      const double gap = r.total - *k.reported_total;
      row.push_back(format_number(*k.reported_total));
      row.push_back(format_number(gap));
      row.push_back(format_number(gap / *k.reported_total));
      log(k.label + ": " + fixed(r.total) + " RM/sym, reported " + fixed(*k.reported_total) + " (gap " +
          fixed(100 * gap / *k.reported_total) + "%)");
      any_reported = true;
    } else {
      row.insert(row.end(), {"", "", ""});
      log(k.label + ": " + fixed(r.total) + " RM/sym");
    }
    costs.rows.push_back(std::move(row));
    chart.categories.push_back(k.label);
    computed.y.push_back(r.total);
    reported.y.push_back(k.reported_total.value_or(std::nan("")));
    result.costs.push_back(r);
  }
  out.csv("complexity/costs.csv", costs);

  CsvTable ratios;
  ratios.header = {"fe", "plain", "fe_total", "plain_total", "ratio"};
  for (const auto& [fe, plain] : c.comparisons) {
    auto find = [&](const std::string& label) {
      for (const auto& k : c.complexity)
        if (k.label == label) return k;
      throw ConfigError("unknown complexity label '" + label + "'");
    };
    const auto cmp = compare(find(fe), find(plain));
    ratios.rows.push_back(
        {fe, plain, format_number(cmp.fe.total), format_number(cmp.plain.total), format_number(cmp.ratio)});
    log(fe + " / " + plain + " = " + fixed(100 * cmp.ratio) + "%");
    result.ratios.push_back(cmp);
  }
  out.csv("complexity/ratios.csv", ratios);

  chart.series.push_back(std::move(computed));
  if (any_reported) chart.series.push_back(std::move(reported));
  out.write("complexity/costs.svg", render_svg(chart));
}

}  // namespace

void set_logging(bool enabled) { g_logging = enabled; }

std::string power_tag(double dbm) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "p%+.2fdBm", dbm == 0.0 ? 0.0 : dbm);
  return buf;
}

CommandResult run_command(std::string_view mode, const ExperimentConfig& config) {
  using Fn = void (*)(const ExperimentConfig&, Outputs&, CommandResult&);
  Fn fn = nullptr;
  if (mode == "simulate") fn = cmd_simulate;
  else if (mode == "train") fn = cmd_train;
  else if (mode == "evaluate") fn = cmd_evaluate;
  else if (mode == "sweep-power") fn = cmd_sweep_power;
  else if (mode == "sweep-cdlen") fn = cmd_sweep_cdlen;
  else if (mode == "complexity") fn = cmd_complexity;
  else throw ConfigError("unknown mode '" + std::string(mode) + "'");

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw DataError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());

  CommandResult result;
  result.mode = std::string(mode);
  Outputs out(config.output_dir);
  fn(config, out, result);
  result.outputs = out.sorted();

  nlohmann::ordered_json manifest;
  manifest["format"] = "felab-manifest";
  manifest["version"] = 1;
  manifest["mode"] = result.mode;
  manifest["config"] = nlohmann::ordered_json::parse(config_to_json(config));
  manifest["outputs"] = nlohmann::ordered_json::array();
  for (const auto& rel : result.outputs)
    manifest["outputs"].push_back({{"path", rel.generic_string()}, {"fnv1a64", hash_file(config.output_dir / rel)}});
  const fs::path manifest_path = config.output_dir / ("manifest-" + result.mode + ".json");
  write_text(manifest_path, manifest.dump(2) + "\n");
  log("wrote " + std::to_string(result.outputs.size()) + " files and " + manifest_path.string());
  return result;
}

}  // namespace felab::app
