// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/app/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "felab/app/commands.hpp"
#include "felab/app/config.hpp"
#include "felab/app/report.hpp"
#include "felab/errors.hpp"

namespace felab::app {

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"felab - field-enhanced learned Volterra equalization workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;

  for (std::string_view mode : kModes) {
    auto* sub = app.add_subcommand(std::string(mode));
    sub->add_option("--config", config_path, "experiment config (JSON) or a run manifest")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out_dir, "override the output directory");
    sub->add_flag("--quiet", quiet, "suppress progress messages");
  }
  auto* reference = app.add_subcommand("config-reference", "print the configuration reference (Markdown)");
  reference->add_option("--out", out_dir, "write to this file instead of stdout");
  auto* defaults = app.add_subcommand("default-config", "print the default configuration");
  defaults->add_option("--out", out_dir, "write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string mode = sub->get_name();
    if (mode == "config-reference" || mode == "default-config") {
      const std::string text = mode == "config-reference" ? config_reference() : config_to_json(default_config()) + "\n";
      if (out_dir.empty())
        std::cout << text;
      else
        write_text(out_dir, text);
      return kExitOk;
    }
    set_logging(!quiet);
    ExperimentConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.resolve();
    run_command(mode, config);
    return kExitOk;
  } catch (const Error& e) {
    const char* kind = "error";
    int code = kExitOther;
    switch (e.category()) {
      case ErrorCategory::config: kind = "config error"; code = kExitConfig; break;
      case ErrorCategory::data: kind = "data error"; code = kExitData; break;
      case ErrorCategory::numeric: kind = "numeric error"; code = kExitNumeric; break;
    }
    std::cerr << "felab: " << kind << ": " << e.what() << '\n';
    return code;
  } catch (const std::exception& e) {
    std::cerr << "felab: error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace felab::app
