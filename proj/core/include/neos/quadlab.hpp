#pragma once

// Quadratic laboratory: oracle constants for L(w) = 1/2 w^T H w under a norm,
// the invariant-direction check, exact simulation of the unnormalized step,
// stability diagrams / threshold bisection and the Taylor-switch experiment.

#include <string>
#include <vector>

#include "neos/norms.hpp"
#include "neos/objectives.hpp"
#include "neos/optimizers.hpp"

namespace neos {

struct QuadCase {
  Matrix h;
  NormSpec norm;
  LayoutPtr layout;
  double s = 0.0;   // max of d^T H d on the unit sphere
  double mu = 0.0;  // min of d^T H d on the unit sphere
  ParamVector dhat;
  bool s_exact = false;
  bool mu_exact = false;
  std::string s_method;
  std::string mu_method;
};

/// Q diag(lambda) Q^T with Haar-like Q and eigenvalues log-uniform in
/// [1, cond], both endpoints included.
Matrix random_pd(Index d, double cond, RngState& rng);

struct OracleOptions {
  std::uint64_t seed = 0;
  int fw_restarts = 200;
  int fw_iterations = 200;
  /// l_inf enumeration is treated as exact up to this dimension.
  Index linf_enumeration_max = 22;
};

/// Computes S, mu and a maximizer with provenance flags.
///   l2 / preconditioned: (generalized) symmetric eigendecomposition, exact.
///   l_inf: S by enumeration, mu = 1 / max_i (H^-1)_ii, exact.
///   block l_{1,2}: S = max block lambda_max (exact for PSD H); mu via the dual
///     problem max_{||y||_inf,2 <= 1} y^T H^-1 y by Frank-Wolfe, approximate.
///   spectral: Frank-Wolfe for S, multistart pattern search for mu, approximate.
QuadCase oracle_constants(const Matrix& h, const NormSpec& norm, LayoutPtr layout = nullptr,
                          const OracleOptions& opt = {});

struct InvariantReport {
  double residual = 0.0;    // ||(H dhat)_* - dhat||_inf
  double attainment = 0.0;  // |<H v, v> - S| / S for v = (H dhat)_*
  bool tie = false;         // residual large but v is an equivalent maximizer
  bool passed = false;
  std::string note;
};

/// Fails outright when dhat itself does not attain S (a stationary point of
/// the dual map need not be a maximizer).
InvariantReport verify_invariant_direction(const Matrix& h, const NormSpec& norm, const ParamVector& dhat, double s,
                                           double tol = 1e-6);

enum class Outcome { kConverged, kDiverged, kOscillating };
std::string to_string(Outcome o);

struct Trajectory {
  Outcome outcome = Outcome::kOscillating;
  std::vector<double> losses;  // L_0 .. L_T
  std::vector<Vector> iterates;
  int steps = 0;  // steps actually taken
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

inline constexpr double kConvergedRatio = 1e-16;
inline constexpr double kDivergedRatio = 1e12;

/// Unnormalized steps from w0 for at most T steps. Stops early at
/// loss < 1e-16 L_0 (converged) or loss > 1e12 L_0 (diverged).
Trajectory simulate(const QuadCase& qc, double eta, const Vector& w0, int t_max, bool keep_iterates = false);

struct StabilityRow {
  double eta = 0.0;
  std::string init;  // "dhat" or "random"
  Outcome outcome = Outcome::kOscillating;
  int steps = 0;
  double final_ratio = 0.0;  // L_T / L_0
};

/// Each eta under w0 = dhat and w0 = random (seeded).
std::vector<StabilityRow> stability_diagram(const QuadCase& qc, const std::vector<double>& etas, int t_max,
                                            std::uint64_t seed, int threads = 1);

/// Converge/diverge transition for w0 = dhat by bisection on eta in [lo, hi];
/// "converged" is stable, anything else unstable.
double bisect_threshold(const QuadCase& qc, double lo, double hi, int t_max, int iterations = 60);

/// Per step t >= 1: +1 if <w_{t+1} - w_t, dhat> and <w_t - w_{t-1}, dhat> have
/// opposite signs, 0 otherwise.
std::vector<int> oscillation_indicators(const std::vector<Vector>& iterates, const Vector& dhat);

struct SwitchCurves {
  std::vector<double> true_loss;    // horizon + 1 values starting at the switch point
  std::vector<double> taylor_loss;
  int switch_step = 0;
};

/// Continue from w_{t0} on the objective and on its frozen second-order model
/// with identical optimizer settings. `perturb` adds that multiple of
/// `direction` to the Taylor start (theory mode); zero by default.
SwitchCurves taylor_switch(const ObjectivePtr& obj, const ParamVector& w_t0, int t0, const OptimizerSpec& spec,
                           int horizon, double perturb = 0.0, const ParamVector& direction = {});

}  // namespace neos
