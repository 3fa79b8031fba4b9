#pragma once

// Experiment configuration: a nested YAML document with a fixed schema.
// Unknown keys, wrong types and out-of-range values are hard errors that
// name the offending key and its line.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neos/objectives.hpp"
#include "neos/optimizers.hpp"
#include "neos/quadlab.hpp"

namespace neos::harness {

inline constexpr int kConfigVersion = 1;

struct QuadraticSpec {
  std::vector<double> diag;                 // H = diag(...)
  std::vector<std::vector<double>> matrix;  // or a dense H
  Index random_dim = 0;                     // or a random PD H of this size
  double random_cond = 10.0;
  std::uint64_t random_seed = 0;
  bool operator==(const QuadraticSpec&) const = default;
};

struct DatasetSpec {
  std::string kind = "synthetic";  // synthetic | cifar | file
  std::string generator = "teacher_mlp";
  Index n = 500;
  Index p = 16;
  Index q = 4;
  double noise = 0.0;
  std::string path;  // cifar directory or saved dataset
  int per_class = 50;
  std::uint64_t seed = 0;
  bool operator==(const DatasetSpec&) const = default;
};

struct ObjectiveSpec {
  std::string kind = "quadratic";  // quadratic | mlp
  QuadraticSpec quadratic;
  std::vector<Index> hidden{64, 64};
  std::string activation = "tanh";
  DatasetSpec dataset;
  bool operator==(const ObjectiveSpec&) const = default;
};

struct PolarSpec {
  std::string method = "exact";  // exact | newton_schulz | polar_express
  int steps = 5;
  std::vector<std::array<double, 3>> schedule;  // empty: built-in schedule
  bool operator==(const PolarSpec&) const = default;
};

struct NormConfig {
  std::string kind = "l2";  // l2 | preconditioned | linf | block_l12 | spectral_max | spectral_sum
  std::vector<double> preconditioner;             // diagonal P
  std::vector<Index> blocks;                      // block_l12 sizes (default: objective layout)
  std::vector<std::array<Index, 2>> shapes;       // spectral shapes (default: objective layout)
  PolarSpec polar;
  bool operator==(const NormConfig&) const = default;
};

struct OptimizerConfig {
  std::string mode = "unnormalized";  // unnormalized | normalized
  std::string stepper = "generic";    // generic | block_cd | spectral | rmsprop
  NormConfig norm;
  double eta = 0.01;
  int steps = 100;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  bool operator==(const OptimizerConfig&) const = default;
};

struct TrackConfig {
  bool enabled = false;
  int t0 = 0;
  int horizon = 50;
  bool operator==(const TrackConfig&) const = default;
};

struct MeasurementConfig {
  int fw_iterations = 20;
  int fw_restarts = 5;
  std::uint64_t fw_seed = 0;
  int cadence = 20;
  std::string sharpness = "auto";  // auto | frank_wolfe | closed
  TrackConfig track;
  std::vector<int> switch_steps;  // taylor-switch
  int switch_horizon = 50;
  bool operator==(const MeasurementConfig&) const = default;
};

struct QuadConfig {
  std::vector<double> eta_over_s;  // grid as multiples of 1/S
  std::vector<double> etas;        // or absolute values
  int t_max = 2000;
  bool bisect = true;
  bool operator==(const QuadConfig&) const = default;
};

struct SweepConfig {
  std::vector<double> etas;
  std::vector<std::string> norms;  // norm kinds; empty keeps the optimizer's
  bool operator==(const SweepConfig&) const = default;
};

struct OracleCheckConfig {
  std::string geometry = "linf";  // linf | block_l12 | l2
  Index dim = 12;
  int block_count = 3;
  int seeds = 100;
  std::vector<int> restarts{1, 5, 10, 50};
  std::vector<int> iterations{50, 200};
  bool operator==(const OracleCheckConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "jsonl", "svg"};
  double smoothing = 0.0;  // exponential smoothing of plotted curves (0 = off)
  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name = "run";
  std::uint64_t seed = 0;
  int threads = 1;
  ObjectiveSpec objective;
  OptimizerConfig optimizer;
  MeasurementConfig measurement;
  QuadConfig quad;
  SweepConfig sweep;
  OracleCheckConfig oracle_check;
  OutputConfig output;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws Error(kConfig) with "key 'a.b' (line N): ..." diagnostics.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);
std::string serialize_config(const ExperimentConfig& cfg);

/// Cross-field checks (positive steps, known enum strings, ...).
void validate_config(const ExperimentConfig& cfg);

// Builders from a validated config.
ObjectivePtr build_objective(const ExperimentConfig& cfg);
/// Quadratic H of the config (throws kConfig for non-quadratic objectives).
Matrix build_quadratic_matrix(const ExperimentConfig& cfg);
NormSpec build_norm(const NormConfig& n, const BlockLayout& layout);
OptimizerSpec build_optimizer(const ExperimentConfig& cfg, const BlockLayout& layout);
RunOptions build_run_options(const ExperimentConfig& cfg);
/// Initial point: objective init for MLPs, a seeded Gaussian for quadratics.
ParamVector initial_point(const Objective& obj, std::uint64_t seed);

}  // namespace neos::harness
