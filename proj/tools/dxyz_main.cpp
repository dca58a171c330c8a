// Command-line driver: run configured experiments and compare result tables.
//
// Exit codes: 0 success, 2 configuration/argument error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dxyz/config.hpp"
#include "dxyz/harness.hpp"

namespace {

struct RunFlags {
  std::string config_path;
  std::string out;
  int workers = 0;          // 0: keep the config's value
  std::int64_t seed = -1;   // < 0: keep the config's value
};

int do_run(const RunFlags& flags, const std::string& subcommand) {
  dxyz::ExperimentConfig cfg = dxyz::load_config(flags.config_path);
  if (!subcommand.empty()) {
    const dxyz::ExperimentKind kind = dxyz::experiment_from_name(subcommand);
    if (cfg.kind_set && cfg.kind != kind)
      throw dxyz::ConfigError("config declares experiment '" +
                              dxyz::experiment_name(cfg.kind) +
                              "' but the subcommand asks for '" + subcommand +
                              "'");
    cfg.kind = kind;
    cfg.kind_set = true;
  }
  if (!cfg.kind_set)
    throw dxyz::ConfigError(
        "no experiment kind: set `experiment = ...` or use a kind subcommand");
  if (!flags.out.empty()) cfg.out = flags.out;
  if (flags.workers > 0) cfg.workers = flags.workers;
  if (flags.seed >= 0) cfg.seed = std::uint64_t(flags.seed);

  dxyz::RunOutcome outcome = dxyz::run_experiment(cfg, std::cout);
  return outcome.exit_code();
}

void add_run_flags(CLI::App* app, RunFlags& flags, bool config_required) {
  auto* opt = app->add_option("--config", flags.config_path,
                              "experiment config file (key = value lines)");
  if (config_required) opt->required();
  app->add_option("--out", flags.out,
                  "output directory (default: $DXYZ_OUT_DIR, else .)");
  app->add_option("--workers", flags.workers,
                  "worker threads (overrides the config)");
  app->add_option("--seed", flags.seed, "run seed (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dissipative XYZ simulator and error-mitigation toolkit"};
  app.require_subcommand(1);

  RunFlags flags;
  std::vector<std::pair<CLI::App*, std::string>> run_commands;

  CLI::App* run = app.add_subcommand("run", "run the experiment named by the config");
  add_run_flags(run, flags, true);
  run_commands.emplace_back(run, "");

  for (dxyz::ExperimentKind kind :
       {dxyz::ExperimentKind::SteadyState, dxyz::ExperimentKind::GSweep,
        dxyz::ExperimentKind::RSweep, dxyz::ExperimentKind::MeanFieldPhase,
        dxyz::ExperimentKind::Spectroscopy,
        dxyz::ExperimentKind::MitigateCriticalPoint}) {
    const std::string name = dxyz::experiment_name(kind);
    CLI::App* sub = app.add_subcommand(name, "run a " + name + " experiment");
    add_run_flags(sub, flags, true);
    run_commands.emplace_back(sub, name);
  }

  std::string table_a, table_b;
  double tol = 0.0;
  CLI::App* compare =
      app.add_subcommand("compare", "compare two result tables cell by cell");
  compare->add_option("table_a", table_a, "first table.tsv")->required();
  compare->add_option("table_b", table_b, "second table.tsv")->required();
  compare->add_option("--tol", tol, "largest acceptable per-cell deviation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; argument errors map to 2
  }

  try {
    if (compare->parsed()) {
      dxyz::CompareReport rep = dxyz::compare_tables(table_a, table_b);
      std::cout << rep.message << "\n";
      if (!rep.compatible) return 2;
      return rep.max_deviation <= tol ? 0 : 3;
    }
    for (const auto& [cmd, name] : run_commands)
      if (cmd->parsed()) return do_run(flags, name);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const dxyz::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
