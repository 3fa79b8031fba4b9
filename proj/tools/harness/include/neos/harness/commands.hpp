#pragma once

// Experiment commands. Each writes its artifacts under `out` and returns the
// numbers it plotted so callers (the CLI, acceptance checks) can assert on
// them without re-reading files.

#include <filesystem>
#include <string>
#include <vector>

#include "neos/harness/config.hpp"
#include "neos/harness/runlog.hpp"

namespace neos::harness {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDivergence = 3, kExitOracle = 4 };

/// Environment variable that relocates relative output directories.
inline constexpr const char* kOutputRootEnv = "NEOS_OUTPUT_ROOT";

/// `dir` resolved against $NEOS_OUTPUT_ROOT when it is relative and the
/// variable is set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

struct TrainResult {
  RunResult run;
  std::vector<RunLogRow> rows;
  int exit_code = kExitOk;
};

/// run.csv, run.jsonl, config.yaml (echo), train.svg and timing.json.
/// Wall-clock numbers live only in timing.json so run.csv stays reproducible.
TrainResult cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct QuadResult {
  QuadCase constants;
  std::vector<StabilityRow> rows;
  std::optional<double> bisected_threshold;
  int exit_code = kExitOk;
};

/// Stability diagram over the eta grid: quad.csv, constants.json, quad.svg.
QuadResult cmd_quad(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct SweepCell {
  std::string norm;
  double eta = 0.0;
  std::filesystem::path dir;
  double final_loss = 0.0;
  bool diverged = false;
  int steps = 0;
};

/// One train run per (norm, eta) cell in out/<norm>_eta<k>/, plus sweep.csv.
std::vector<SweepCell> cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct SwitchResult {
  std::vector<SwitchCurves> curves;  // one per switch step, in config order
  int exit_code = kExitOk;
};

/// Trains to each switch step, then continues on the objective and on its
/// frozen quadratic model: switch_<t0>.csv and switch_<t0>.svg per step.
SwitchResult cmd_taylor_switch(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct TrackRow {
  int j = 0;
  double curvature = 0.0;     // dhat^T H(w_{t0+j}) dhat
  double running_mean = 0.0;  // prefix average of curvature
  double sharpness = 0.0;     // generalized sharpness at w_{t0+j}
};

struct TrackResult {
  double sharpness_t0 = 0.0;
  ParamVector direction;
  std::vector<TrackRow> rows;
  double threshold = 0.0;  // 2/eta
  int exit_code = kExitOk;
};

/// Fixes the sharpness maximizer at t0 and tracks its curvature for m steps:
/// track.csv, track.svg and the direction checkpoint direction.{bin,layout}.
TrackResult cmd_track_direction(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct OracleCell {
  int restarts = 0;
  int iterations = 0;
  std::vector<double> rel_error;  // (oracle - estimate) / |oracle| per seed
  double mean_error = 0.0;
  int within_band = 0;
  int above_oracle = 0;  // estimates exceeding the oracle by > 1e-8
};

struct OracleCheckResult {
  std::string geometry;
  double band = 0.0;          // relative tolerance of the acceptance cell
  int required_within = 0;    // seeds that must fall in the band
  std::vector<OracleCell> cells;
  bool passed = false;
  bool skipped = false;
  std::string note;
  int exit_code = kExitOk;
};

/// FW vs exact oracle over seeds x restarts x iterations: oracle_check.csv
/// and a summary. The largest (M, K) cell is the acceptance cell.
OracleCheckResult cmd_oracle_check(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace neos::harness
