// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "felab/errors.hpp"

namespace felab::app {
namespace {

using Json = nlohmann::ordered_json;

void check_keys(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + key + "' in " + where + " (expected one of: " + list + ")");
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string_view to_string(StepCheck c) {
  switch (c) {
    case StepCheck::ignore: return "ignore";
    case StepCheck::warn: return "warn";
    case StepCheck::reject: return "reject";
  }
  return "warn";
}

StepCheck step_check_from_string(const std::string& s) {
  if (s == "ignore") return StepCheck::ignore;
  if (s == "warn") return StepCheck::warn;
  if (s == "reject") return StepCheck::reject;
  throw ConfigError("link.step_check: unknown value '" + s + "' (ignore, warn, reject)");
}

Json fiber_json(const FiberParams& f) {
  Json j;
  j["dispersion_ps_nm_km"] = f.dispersion;
  j["gamma_per_w_km"] = f.gamma;
  j["alpha_db_per_km"] = f.alpha_db;
  j["length_km"] = f.length_km;
  j["ref_wavelength_nm"] = f.ref_wavelength_nm;
  return j;
}

FiberParams parse_fiber(const Json& j, FiberParams f) {
  check_keys(j, "link.fiber",
             {"dispersion_ps_nm_km", "gamma_per_w_km", "alpha_db_per_km", "length_km", "ref_wavelength_nm"});
  read(j, "dispersion_ps_nm_km", f.dispersion);
  read(j, "gamma_per_w_km", f.gamma);
  read(j, "alpha_db_per_km", f.alpha_db);
  read(j, "length_km", f.length_km);
  read(j, "ref_wavelength_nm", f.ref_wavelength_nm);
  return f;
}

Json complexity_json(const ComplexityConfig& c) {
  Json j;
  j["label"] = c.label;
  j["n_ch"] = c.n_ch;
  j["steps_per_span"] = c.steps_per_span;
  j["spans"] = c.spans;
  j["s_spm"] = c.s_spm;
  j["s_xpm"] = c.s_xpm;
  j["s_cd"] = c.s_cd;
  j["n_fft"] = c.n_fft;
  j["overlap_m"] = c.overlap_m;
  j["q"] = c.q;
  j["reported_total"] = c.reported_total ? Json(*c.reported_total) : Json(nullptr);
  return j;
}

ComplexityConfig parse_complexity(const Json& j) {
  check_keys(j, "complexity.configs[]",
             {"label", "n_ch", "steps_per_span", "spans", "s_spm", "s_xpm", "s_cd", "n_fft", "overlap_m", "q",
              "reported_total"});
  ComplexityConfig c;
  read(j, "label", c.label);
  read(j, "n_ch", c.n_ch);
  read(j, "steps_per_span", c.steps_per_span);
  read(j, "spans", c.spans);
  read(j, "s_spm", c.s_spm);
  read(j, "s_xpm", c.s_xpm);
  read(j, "s_cd", c.s_cd);
  read(j, "n_fft", c.n_fft);
  read(j, "overlap_m", c.overlap_m);
  read(j, "q", c.q);
  if (j.contains("reported_total") && !j.at("reported_total").is_null())
    c.reported_total = j.at("reported_total").get<double>();
  return c;
}

Json cd_point_json(const CdPoint& p) { return Json{{"s_cd", p.s_cd}, {"delta_cd_ps_nm", p.delta_cd}}; }

CdPoint parse_cd_point(const Json& j) {
  check_keys(j, "sweep.cd_filters[]", {"s_cd", "delta_cd_ps_nm"});
  CdPoint p;
  read(j, "s_cd", p.s_cd);
  read(j, "delta_cd_ps_nm", p.delta_cd);
  return p;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();

  Json link;
  link["spans"] = c.link.spans;
  link["edfa_nf_db"] = c.link.edfa_nf_db;
  link["fiber"] = fiber_json(c.link.fiber);
  link["sim_rate_hz"] = c.sim.sim_rate;
  link["ssfm_step_km"] = c.sim.ssfm.step_km;
  link["nonlinear"] = c.sim.ssfm.nonlinear;
  link["noise"] = c.sim.noise;
  link["step_check"] = std::string(to_string(c.sim.ssfm.step_check));
  j["link"] = link;

  Json tx;
  tx["n_ch"] = c.tx.n_ch;
  tx["modulation"] = std::string(felab::to_string(c.tx.modulation));
  tx["baud_rate"] = c.tx.baud_rate;
  tx["spacing_hz"] = c.tx.spacing;
  tx["rolloff"] = c.tx.rolloff;
  tx["tx_sps"] = c.tx.tx_sps;
  tx["launch_power_dbm"] = c.launch_powers;
  j["tx"] = tx;

  Json eq;
  eq["steps_per_span"] = c.eq.steps_per_span;
  eq["s_spm"] = c.eq.s_spm;
  eq["s_xpm"] = c.eq.s_xpm;
  eq["s_cd"] = c.eq.s_cd;
  eq["delta_cd_ps_nm"] = c.eq.delta_cd;
  eq["n_fft"] = c.eq.n_fft;
  eq["overlap_m"] = c.eq.overlap_m;
  eq["sps"] = c.eq.sps;
  eq["band_hz"] = c.eq.band_hz;
  eq["placement"] = std::string(felab::to_string(c.eq.placement));
  j["eq"] = eq;

  Json train;
  train["learning_rate"] = c.train.learning_rate;
  train["batch_blocks"] = c.train.batch_blocks;
  train["epochs"] = c.train.epochs;
  train["train_symbols"] = c.train.train_symbols;
  train["val_symbols"] = c.train.val_symbols;
  train["test_symbols"] = c.train.test_symbols;
  train["val_metric"] = std::string(felab::to_string(c.train.val_metric));
  train["divergence_factor"] = c.train.divergence_factor;
  train["divergence_patience"] = c.train.divergence_patience;
  j["train"] = train;

  Json sweep;
  sweep["launch_power_dbm"] = c.sweep_power_dbm ? Json(*c.sweep_power_dbm) : Json(nullptr);
  sweep["cd_filters"] = Json::array();
  for (const auto& p : c.cd_points) sweep["cd_filters"].push_back(cd_point_json(p));
  j["sweep"] = sweep;

  Json cx;
  cx["configs"] = Json::array();
  for (const auto& k : c.complexity) cx["configs"].push_back(complexity_json(k));
  cx["comparisons"] = Json::array();
  for (const auto& [fe, plain] : c.comparisons) cx["comparisons"].push_back(Json{{"fe", fe}, {"plain", plain}});
  j["complexity"] = cx;
  return j;
}

ExperimentConfig from_json(const Json& j) {
  ExperimentConfig c = default_config();
  check_keys(j, "config", {"name", "seed", "output_dir", "link", "tx", "eq", "train", "sweep", "complexity"});
  read(j, "name", c.name);
  read(j, "seed", c.seed);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("link")) {
    const auto& l = j.at("link");
    check_keys(l, "link",
               {"spans", "edfa_nf_db", "fiber", "sim_rate_hz", "ssfm_step_km", "nonlinear", "noise", "step_check"});
    read(l, "spans", c.link.spans);
    read(l, "edfa_nf_db", c.link.edfa_nf_db);
    if (l.contains("fiber")) c.link.fiber = parse_fiber(l.at("fiber"), c.link.fiber);
    read(l, "sim_rate_hz", c.sim.sim_rate);
    read(l, "ssfm_step_km", c.sim.ssfm.step_km);
    read(l, "nonlinear", c.sim.ssfm.nonlinear);
    read(l, "noise", c.sim.noise);
    if (l.contains("step_check")) c.sim.ssfm.step_check = step_check_from_string(l.at("step_check").get<std::string>());
  }
  if (j.contains("tx")) {
    const auto& t = j.at("tx");
    check_keys(t, "tx", {"n_ch", "modulation", "baud_rate", "spacing_hz", "rolloff", "tx_sps", "launch_power_dbm"});
    read(t, "n_ch", c.tx.n_ch);
    if (t.contains("modulation")) c.tx.modulation = modulation_from_string(t.at("modulation").get<std::string>());
    read(t, "baud_rate", c.tx.baud_rate);
    read(t, "spacing_hz", c.tx.spacing);
    read(t, "rolloff", c.tx.rolloff);
    read(t, "tx_sps", c.tx.tx_sps);
    if (t.contains("launch_power_dbm")) {
      const auto& p = t.at("launch_power_dbm");
      c.launch_powers = p.is_array() ? p.get<std::vector<double>>() : std::vector<double>{p.get<double>()};
    }
  }
  if (j.contains("eq")) {
    const auto& e = j.at("eq");
    check_keys(e, "eq",
               {"steps_per_span", "s_spm", "s_xpm", "s_cd", "delta_cd_ps_nm", "n_fft", "overlap_m", "sps", "band_hz",
                "placement"});
    read(e, "steps_per_span", c.eq.steps_per_span);
    read(e, "s_spm", c.eq.s_spm);
    read(e, "s_xpm", c.eq.s_xpm);
    read(e, "s_cd", c.eq.s_cd);
    read(e, "delta_cd_ps_nm", c.eq.delta_cd);
    read(e, "n_fft", c.eq.n_fft);
    read(e, "overlap_m", c.eq.overlap_m);
    read(e, "sps", c.eq.sps);
    read(e, "band_hz", c.eq.band_hz);
    if (e.contains("placement")) c.eq.placement = placement_from_string(e.at("placement").get<std::string>());
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train",
               {"learning_rate", "batch_blocks", "epochs", "train_symbols", "val_symbols", "test_symbols",
                "val_metric", "divergence_factor", "divergence_patience"});
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "batch_blocks", c.train.batch_blocks);
    read(t, "epochs", c.train.epochs);
    read(t, "train_symbols", c.train.train_symbols);
    read(t, "val_symbols", c.train.val_symbols);
    read(t, "test_symbols", c.train.test_symbols);
    if (t.contains("val_metric")) c.train.val_metric = snr_metric_from_string(t.at("val_metric").get<std::string>());
    read(t, "divergence_factor", c.train.divergence_factor);
    read(t, "divergence_patience", c.train.divergence_patience);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, "sweep", {"launch_power_dbm", "cd_filters"});
    if (s.contains("launch_power_dbm")) {
      const auto& p = s.at("launch_power_dbm");
      c.sweep_power_dbm = p.is_null() ? std::nullopt : std::optional<double>(p.get<double>());
    }
    if (s.contains("cd_filters")) {
      c.cd_points.clear();
      for (const auto& p : s.at("cd_filters")) c.cd_points.push_back(parse_cd_point(p));
    }
  }
  if (j.contains("complexity")) {
    const auto& x = j.at("complexity");
    check_keys(x, "complexity", {"configs", "comparisons"});
    if (x.contains("configs")) {
      c.complexity.clear();
      for (const auto& k : x.at("configs")) c.complexity.push_back(parse_complexity(k));
    }
    if (x.contains("comparisons")) {
      c.comparisons.clear();
      for (const auto& k : x.at("comparisons")) {
        check_keys(k, "complexity.comparisons[]", {"fe", "plain"});
        c.comparisons.emplace_back(k.at("fe").get<std::string>(), k.at("plain").get<std::string>());
      }
    }
  }
  c.resolve();
  return c;
}

// Dotted key paths and their meaning; "[]" marks the members of list entries.
const std::vector<std::pair<std::string, std::string>>& key_docs() {
  static const std::vector<std::pair<std::string, std::string>> docs = {
      {"name", "Run label echoed into manifests."},
      {"seed", "Master seed; every random stream is derived from it. Overridden by --seed."},
      {"output_dir", "Directory for all outputs. Overridden by --out."},
      {"link.spans", "Number of fiber spans, each followed by an EDFA that undoes the span loss."},
      {"link.edfa_nf_db", "EDFA noise figure in dB."},
      {"link.fiber.dispersion_ps_nm_km", "Dispersion parameter D in ps/(nm km)."},
      {"link.fiber.gamma_per_w_km", "Kerr nonlinearity coefficient in 1/(W km)."},
      {"link.fiber.alpha_db_per_km", "Fiber attenuation in dB/km."},
      {"link.fiber.length_km", "Span length in km."},
      {"link.fiber.ref_wavelength_nm", "Reference wavelength for beta2 in nm."},
      {"link.sim_rate_hz", "Sample rate of the wideband split-step grid."},
      {"link.ssfm_step_km", "Split-step length in km."},
      {"link.nonlinear", "Enables the Kerr term in the simulator."},
      {"link.noise", "Enables EDFA ASE noise."},
      {"link.step_check", "Reaction to a split step whose peak nonlinear phase exceeds 0.05 rad: ignore, warn or reject."},
      {"tx.n_ch", "Number of WDM channels."},
      {"tx.modulation", "QAM64, QAM16 or QPSK (Gray coded)."},
      {"tx.baud_rate", "Symbol rate per channel in Bd."},
      {"tx.spacing_hz", "Channel spacing in Hz."},
      {"tx.rolloff", "Root-raised-cosine roll-off."},
      {"tx.tx_sps", "Samples per symbol of the shaped channel waveforms before multiplexing."},
      {"tx.launch_power_dbm", "Launch powers per channel in dBm; one dataset and model per entry."},
      {"eq.steps_per_span", "Nonlinear steps per span (N_StpS)."},
      {"eq.s_spm", "SPM power filter taps (odd)."},
      {"eq.s_xpm", "XPM power filter taps (odd)."},
      {"eq.s_cd", "Field FIR taps around every nonlinear stage (odd, 0 for the plain model)."},
      {"eq.delta_cd_ps_nm", "Dispersion in ps/nm handed from the FD stages to the field FIRs."},
      {"eq.n_fft", "Overlap-save block length."},
      {"eq.overlap_m", "Overlap M; each block keeps n_fft - M + 1 samples."},
      {"eq.sps", "Equalizer samples per symbol; also the demultiplexer output rate."},
      {"eq.band_hz", "Half-width of the band with exact CD compensation; 0 selects spacing/2."},
      {"eq.placement", "Nonlinear step location inside each segment: midpoint or power-centroid."},
      {"train.learning_rate", "Adam learning rate."},
      {"train.batch_blocks", "Overlap-save blocks per optimizer step."},
      {"train.epochs", "Training epochs."},
      {"train.train_symbols", "Training symbols per channel."},
      {"train.val_symbols", "Validation symbols per channel."},
      {"train.test_symbols", "Test symbols per channel."},
      {"train.val_metric", "SNR used for model selection and reports: ber (BER-derived) or evm."},
      {"train.divergence_factor", "Abort when the epoch loss exceeds this multiple of the initial loss..."},
      {"train.divergence_patience", "...for this many consecutive epochs."},
      {"sweep.launch_power_dbm", "Launch power of sweep-cdlen; null uses the first tx.launch_power_dbm entry."},
      {"sweep.cd_filters", "Field filter configurations trained by sweep-cdlen."},
      {"sweep.cd_filters[].s_cd", "Field FIR taps."},
      {"sweep.cd_filters[].delta_cd_ps_nm", "Delegated dispersion in ps/nm."},
      {"complexity.configs", "Model configurations costed by the complexity mode."},
      {"complexity.configs[].label", "Row label."},
      {"complexity.configs[].n_ch", "MIMO size."},
      {"complexity.configs[].steps_per_span", "Nonlinear steps per span."},
      {"complexity.configs[].spans", "Spans."},
      {"complexity.configs[].s_spm", "SPM taps."},
      {"complexity.configs[].s_xpm", "XPM taps."},
      {"complexity.configs[].s_cd", "Field FIR taps, 0 for the plain model."},
      {"complexity.configs[].n_fft", "FFT size (power of two)."},
      {"complexity.configs[].overlap_m", "Overlap M."},
      {"complexity.configs[].q", "Samples per symbol."},
      {"complexity.configs[].reported_total", "Externally reported RM/sym for comparison, or null."},
      {"complexity.comparisons", "Pairs of labels whose cost ratio fe/plain is reported."},
      {"complexity.comparisons[].fe", "Label of the numerator row."},
      {"complexity.comparisons[].plain", "Label of the denominator row."},
  };
  return docs;
}

const std::string* find_doc(const std::string& path) {
  for (const auto& [k, v] : key_docs())
    if (k == path) return &v;
  return nullptr;
}

void collect_rows(const Json& j, const std::string& prefix, std::ostringstream& os) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_rows(value, path, os);
      continue;
    }
    const std::string* doc = find_doc(path);
    if (!doc) throw std::logic_error("undocumented config key " + path);
    os << "| `" << path << "` | `" << value.dump() << "` | " << *doc << " |\n";
    if (value.is_array() && !value.empty() && value.front().is_object())
      for (const auto& [k2, v2] : value.front().items()) {
        const std::string p2 = path + "[]." + k2;
        const std::string* d2 = find_doc(p2);
        if (!d2) throw std::logic_error("undocumented config key " + p2);
        os << "| `" << p2 << "` | `" << v2.dump() << "` (first entry) | " << *d2 << " |\n";
      }
  }
}

}  // namespace

void ExperimentConfig::resolve() {
  if (launch_powers.empty()) throw ConfigError("tx.launch_power_dbm must list at least one power");
  link = LinkSpec::matched(link.spans, link.fiber, link.edfa_nf_db);
  link.validate();
  tx.validate();
  sim.rolloff = tx.rolloff;
  if (!(sim.sim_rate > 0)) throw ConfigError("link.sim_rate_hz must be positive");
  if (!(sim.ssfm.step_km > 0)) throw ConfigError("link.ssfm_step_km must be positive");
  eq.n_ch = tx.n_ch;
  eq.baud_rate = tx.baud_rate;
  eq.spacing = tx.spacing;
  eq.spans = link.spans;
  eq.fiber = link.fiber;
  eq.validate();
  train.seed = seed;
  train.validate(eq);
  for (const auto& p : cd_points) {
    EqualizerSpec s = eq;
    s.s_cd = p.s_cd;
    s.delta_cd = p.delta_cd;
    s.validate();
  }
  for (const auto& [fe, plain] : comparisons) {
    auto known = [&](const std::string& label) {
      for (const auto& c : complexity)
        if (c.label == label) return true;
      return false;
    };
    if (!known(fe) || !known(plain))
      throw ConfigError("complexity comparison '" + fe + "' / '" + plain + "' names an unknown config label");
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.train.epochs = 50;
  c.train.train_symbols = std::size_t{1} << 14;
  c.train.val_symbols = std::size_t{1} << 14;
  c.train.test_symbols = std::size_t{1} << 14;
  c.cd_points = {{3, 4.25}, {5, 4.25}, {7, 4.25}};

  ComplexityConfig fe9;
  fe9.label = "9x9 FE L-IVSTF";
  fe9.reported_total = 63374.59;
  ComplexityConfig plain9 = fe9;
  plain9.label = "9x9 L-IVSTF";
  plain9.steps_per_span = 4;
  plain9.s_cd = 0;
  plain9.reported_total.reset();
  ComplexityConfig fe3 = fe9;
  fe3.label = "3x3 FE L-IVSTF";
  fe3.n_ch = 3;
  fe3.steps_per_span = 1;
  fe3.reported_total = 4935.24;
  ComplexityConfig plain3 = plain9;
  plain3.label = "3x3 L-IVSTF";
  plain3.n_ch = 3;
  c.complexity = {fe9, plain9, fe3, plain3};
  c.comparisons = {{fe9.label, plain9.label}, {fe3.label, plain3.label}};
  c.resolve();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (j.is_object() && j.contains("format") && j.at("format") == "felab-manifest") {
    if (!j.contains("config")) throw ConfigError("manifest has no config member");
    j = j.at("config");
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

std::string config_reference() {
  std::ostringstream os;
  os << "# felab configuration reference\n\n"
     << "Generated by `felab config-reference`. A config is one JSON document; every key is optional and\n"
     << "missing keys take the defaults below. Unknown keys are rejected. The equalizer inherits\n"
     << "n_ch, baud rate and spacing from `tx` and spans and fiber from `link`; the EDFA gain always\n"
     << "equals the span loss. A run manifest (`manifest-<mode>.json`) is also accepted as a config.\n\n"
     << "| key | default | meaning |\n|---|---|---|\n";
  collect_rows(to_json(default_config()), "", os);
  return os.str();
}

}  // namespace felab::app
