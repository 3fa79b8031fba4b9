#pragma once

// Steepest descent in an arbitrary norm (unnormalized and normalized), the
// closed-form steppers it specializes to, an EMA-preconditioned variant and
// an instrumented training loop.

#include <functional>
#include <optional>
#include <vector>

#include "neos/norms.hpp"
#include "neos/objectives.hpp"
#include "neos/spectra.hpp"

namespace neos {

enum class StepMode { kUnnormalized, kNormalized };

/// Which update rule `run` drives.
enum class StepperKind {
  kGeneric,   // w - eta ||g||_* (g)_*  (or w - eta (g)_*)
  kBlockCd,   // tie-averaged block coordinate descent
  kSpectral,  // per-block polar factor scaled by the summed nuclear norms
  kRmsprop,   // diagonal EMA preconditioner
};

struct RmspropSchedule {
  double beta2 = 0.99;
  double epsilon = 1e-8;
};

struct OptimizerSpec {
  StepMode mode = StepMode::kUnnormalized;
  NormSpec norm;
  double eta = 0.01;
  StepperKind stepper = StepperKind::kGeneric;
  std::optional<RmspropSchedule> rmsprop;

  /// Throws kInvalidArgument on eta <= 0 or inconsistent stepper/norm pairs.
  void validate() const;
};

/// ||g||_* at or below this counts as stationary.
inline constexpr double kStationaryTol = 1e-14;
/// Loss above this (or non-finite) counts as diverged.
inline constexpr double kDivergenceLoss = 1e12;

struct StepRecord {
  int step = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double dual_grad_norm = 0.0;
  ParamVector update;  // w_{t+1} - w_t
  /// Chord smoothness in the step's geometry; empty for stationary or diverged steps.
  std::optional<double> dir_smoothness;
  double threshold = 0.0;  // 2/eta or 2 ||g||_* / eta
  double eta = 0.0;
  StepMode mode = StepMode::kUnnormalized;
  bool diverged = false;
  bool stationary = false;
  /// Diagonal preconditioner used by this step (RMSprop only).
  std::optional<Vector> preconditioner;
  std::optional<double> sharpness;
  std::optional<double> fw_gap;
  int sharpness_restarts = 0;
  double sharpness_ms = 0.0;
};

struct StepResult {
  ParamVector w;
  StepRecord record;
};

StepResult step(const Objective& obj, const ParamVector& w, const OptimizerSpec& spec);

/// Block l_{1,2} steepest descent: every block whose gradient norm is within
/// 1e-12 (relative) of the largest moves by -(eta / |J|) g^l.
StepResult block_cd_step(const Objective& obj, const ParamVector& w, const BlockLayout& partition, double eta,
                         StepMode mode = StepMode::kUnnormalized);

/// W^l <- W^l - eta * gamma * polar(G^l) with gamma = sum_l ||G^l||_nuc
/// (gamma = 1 in normalized mode). Blocks with ||G^l||_F <= 1e-14 are skipped.
StepResult spectral_step(const Objective& obj, const ParamVector& w, const std::vector<std::pair<Index, Index>>& shapes,
                         double eta, const PolarMethod& method, StepMode mode = StepMode::kUnnormalized);

struct RmspropState {
  Vector nu;  // EMA of g^2
};

/// nu <- beta2 nu + (1 - beta2) g^2, P = diag(sqrt(nu) + eps), w <- w - eta P^{-1} g
/// (unnormalized) or the normalized step in the P geometry. `state` is updated.
StepResult rmsprop_step(const Objective& obj, const ParamVector& w, RmspropState& state, double beta2, double epsilon,
                        double eta, StepMode mode = StepMode::kUnnormalized);

struct RunOptions {
  int steps = 100;
  /// Sharpness every `cadence` steps (0 disables).
  int cadence = 20;
  SharpnessMethod sharpness_method = SharpnessMethod::kAuto;
  FwConfig fw;
  PowerOptions power;
  bool keep_updates = false;
  bool keep_iterates = false;
  /// Called once per record as soon as it is complete.
  std::function<void(const StepRecord&)> on_record;
};

struct RunResult {
  std::vector<StepRecord> records;
  ParamVector final_w;
  std::vector<ParamVector> iterates;  // w_0 .. w_T when keep_iterates
  bool diverged = false;
};

/// Geometry a record's curvature numbers are measured in (P_t for RMSprop).
NormSpec step_geometry(const OptimizerSpec& spec, const StepRecord& record);

RunResult run(const Objective& obj, const ParamVector& w0, const OptimizerSpec& spec, const RunOptions& opt);

}  // namespace neos
