#pragma once

// Curvature measurements: directional smoothness, generalized sharpness
// (restarted Frank-Wolfe, closed forms, brute force), Frank-Wolfe gap,
// projected power iteration and fixed-direction curvature.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "neos/norms.hpp"
#include "neos/objectives.hpp"

namespace neos {

struct SharpnessEstimate {
  double value = 0.0;
  ParamVector direction;  // unit norm in the geometry
  double fw_gap = 0.0;
  int restarts_used = 0;
  std::vector<double> restart_values;
  int hvp_calls = 0;
  std::string method;
  /// Block l_{1,2} closed form applied to an indefinite Hessian: the value is
  /// the PSD formula, not a bound.
  bool psd_only = false;
};

struct FwConfig {
  int iterations = 50;  // K
  int restarts = 5;     // M
  std::uint64_t seed = 0;
  int threads = 1;
  int max_redraws = 8;
};

/// (L(y) - L(w) - <grad(w), y - w>) / (1/2 ||y - w||^2). Throws on y == w.
double directional_smoothness(const Objective& obj, const ParamVector& w, const ParamVector& y,
                              const NormSpec& norm);
/// Same quantity from already evaluated pieces.
double directional_smoothness(double loss_w, double loss_y, const ParamVector& grad_w, const ParamVector& chord,
                              const NormSpec& norm);

/// Restarted Frank-Wolfe for max_{||d|| <= 1} d^T H d. The step size
/// 2 / (2 + k) restarts with every run; restarts are folded in index order.
SharpnessEstimate sharpness_fw(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                               const FwConfig& cfg);

struct PowerOptions {
  double tolerance = 1e-10;
  int max_iterations = 5000;
  std::uint64_t seed = 0;
  /// For the block l_{1,2} closed form: also estimate lambda_min(H) and set
  /// psd_only when it is negative.
  bool check_psd = true;
};

struct EigenEstimate {
  double value = 0.0;
  Vector vector;
  int iterations = 0;
};

/// Largest algebraic eigenvalue of the symmetric operator `apply` on R^n.
/// Restarted Lanczos; `max_iterations` caps the operator applications.
EigenEstimate lambda_max(const std::function<Vector(const Vector&)>& apply, Index n, const PowerOptions& opt);
EigenEstimate lambda_min(const std::function<Vector(const Vector&)>& apply, Index n, const PowerOptions& opt);

/// Closed forms: l2 -> lambda_max(H); preconditioned -> lambda_max(P^-1/2 H P^-1/2);
/// block l_{1,2} -> max_l lambda_max(H_ll) (exact for PSD H).
SharpnessEstimate sharpness_closed(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                                   const PowerOptions& opt = {});

struct BruteForceResult {
  double value = 0.0;
  Vector argmax;  // entries in {-1, +1}
};

/// Exhaustive max of d^T H d over d in {-1, +1}^n, n <= 22.
BruteForceResult sharpness_bruteforce_linf(const Matrix& h);

/// 2 (||H u||_* - u^T H u); nonnegative for ||u|| <= 1.
double fw_gap(const ParamVector& u, const HvpOracle& hvp, const NormSpec& norm);

/// u <- project_sphere(H u); best quadratic form seen. No convergence
/// guarantee outside l2; may stall or cycle.
SharpnessEstimate projected_power_iteration(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                                            int iterations, std::uint64_t seed);

/// d^T hess(w) d.
double directional_curvature(const Objective& obj, const ParamVector& w, const ParamVector& d);

enum class SharpnessMethod { kAuto, kFrankWolfe, kClosed };

/// kAuto: closed form for l2 / preconditioned, Frank-Wolfe otherwise.
SharpnessEstimate estimate_sharpness(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                                     SharpnessMethod method, const FwConfig& fw, const PowerOptions& power = {});

}  // namespace neos
