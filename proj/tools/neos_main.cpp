// neos: command-line driver for the steepest-descent sharpness experiments.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "neos/harness/commands.hpp"

namespace fs = std::filesystem;
using namespace neos;
using namespace neos::harness;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> cadence;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (overrides output.directory)");
  cmd->add_option("--seed", c.seed, "seed (overrides the config)");
  cmd->add_option("--cadence", c.cadence, "sharpness every N steps (0 disables)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

std::pair<ExperimentConfig, fs::path> prepare(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.cadence) cfg.measurement.cadence = *c.cadence;
  if (c.threads) cfg.threads = *c.threads;
  validate_config(cfg);
  return {cfg, resolve_output_dir(c.out.empty() ? cfg.output.directory : c.out)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neos: sharpness and stability experiments for steepest descent in arbitrary norms"};
  app.require_subcommand(1);

  Common common;
  auto* train = app.add_subcommand("train", "train and log per-step curvature");
  auto* quad = app.add_subcommand("quad", "stability diagram on a quadratic");
  auto* sweep = app.add_subcommand("sweep", "train over a grid of norms and step sizes");
  auto* taylor = app.add_subcommand("taylor-switch", "continue on the frozen quadratic model");
  auto* track = app.add_subcommand("track-direction", "curvature along a fixed sharpness maximizer");
  auto* oracle = app.add_subcommand("oracle-check", "Frank-Wolfe sharpness against exact oracles");
  for (auto* cmd : {train, quad, sweep, taylor, track, oracle}) add_common(cmd, common);

  std::string log_file;
  auto* validate = app.add_subcommand("validate-log", "re-derive the columns of a run.csv");
  validate->add_option("file", log_file, "run.csv")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (validate->parsed()) {
      const auto rep = validate_run_log(read_run_csv(log_file));
      std::cout << rep.rows << " rows, " << rep.checked_signs << " sign checks, " << rep.mismatches
                << " mismatches\n";
      for (const auto& p : rep.problems) std::cout << "  " << p << "\n";
      return rep.ok() ? kExitOk : kExitOracle;
    }

    const auto [cfg, out] = prepare(common);
    if (train->parsed()) {
      const auto r = cmd_train(cfg, out);
      std::cout << "train: " << r.rows.size() << " steps" << (r.run.diverged ? " (diverged)" : "") << ", final loss "
                << (r.rows.empty() ? 0.0 : r.rows.back().next_loss) << " -> " << out.string() << "\n";
      return r.exit_code;
    }
    if (quad->parsed()) {
      const auto r = cmd_quad(cfg, out);
      std::cout << "quad: S = " << r.constants.s << " (" << r.constants.s_method << "), mu = " << r.constants.mu
                << " (" << r.constants.mu_method << ")";
      if (r.bisected_threshold)
        std::cout << ", threshold " << *r.bisected_threshold << " vs 2/S = " << 2 / r.constants.s;
      std::cout << " -> " << out.string() << "\n";
      return r.exit_code;
    }
    if (sweep->parsed()) {
      const auto cells = cmd_sweep(cfg, out);
      for (const auto& c : cells)
        std::cout << c.norm << " eta=" << c.eta << " final_loss=" << c.final_loss << (c.diverged ? " diverged" : "")
                  << "\n";
      return kExitOk;
    }
    if (taylor->parsed()) {
      const auto r = cmd_taylor_switch(cfg, out);
      for (const auto& c : r.curves)
        std::cout << "switch " << c.switch_step << ": true " << c.true_loss.back() << ", model "
                  << c.taylor_loss.back() << "\n";
      if (r.exit_code == kExitDivergence) std::cerr << "trajectory diverged before a switch step\n";
      return r.exit_code;
    }
    if (track->parsed()) {
      const auto r = cmd_track_direction(cfg, out);
      if (r.exit_code == kExitDivergence) {
        std::cerr << "trajectory diverged before t0 + horizon\n";
        return r.exit_code;
      }
      std::cout << "track: S(t0) = " << r.sharpness_t0 << ", running mean " << r.rows.back().running_mean
                << ", 2/eta = " << r.threshold << "\n";
      return r.exit_code;
    }
    if (oracle->parsed()) {
      const auto r = cmd_oracle_check(cfg, out);
      if (r.skipped) {
        std::cout << "oracle-check skipped: " << r.note << "\n";
        return kExitOk;
      }
      for (const auto& c : r.cells)
        std::cout << "M=" << c.restarts << " K=" << c.iterations << " mean rel error " << c.mean_error << ", "
                  << c.within_band << " within band\n";
      std::cout << (r.passed ? "pass" : "FAIL") << "\n";
      return r.exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig ? kExitConfig : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
