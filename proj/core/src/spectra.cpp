#include "neos/spectra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <limits>

namespace neos {

double directional_smoothness(double loss_w, double loss_y, const ParamVector& grad_w, const ParamVector& chord,
                              const NormSpec& norm) {
  const double len = norm_value(norm, chord);
  if (len == 0.0) throw Error(ErrorCode::kZeroVector, "directional smoothness needs y != w");
  return (loss_y - loss_w - inner(grad_w, chord)) / (0.5 * len * len);
}

double directional_smoothness(const Objective& obj, const ParamVector& w, const ParamVector& y,
                              const NormSpec& norm) {
  const auto [lw, gw] = obj.loss_and_grad(w);
  return directional_smoothness(lw, obj.loss(y), gw, y - w, norm);
}

// ---------------------------------------------------------------------------
// Frank-Wolfe

namespace {

struct RestartResult {
  double value = -std::numeric_limits<double>::infinity();
  ParamVector direction;
  ParamVector h_direction;
  int hvp_calls = 0;
};

RestartResult fw_restart(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm, const FwConfig& cfg,
                         int restart) {
  RestartResult r;
  RngState rng = RngState(cfg.seed).fork(static_cast<std::uint64_t>(restart));
  ParamVector u;
  ParamVector hu;
  for (int draw = 0; draw <= cfg.max_redraws; ++draw) {
    u = project_sphere(norm, gaussian_like(layout, rng));
    hu = hvp(u);
    ++r.hvp_calls;
    if (!hu.is_zero()) break;
  }
  if (hu.is_zero()) {
    // H vanishes on every draw; the quadratic form is zero there.
    r.value = 0.0;
    r.direction = u;
    r.h_direction = hu;
    return r;
  }
  for (int k = 0; k < cfg.iterations; ++k) {
    if (hu.is_zero()) break;
    const ParamVector v = dual_vector(norm, hu);
    const double gamma = 2.0 / (2.0 + k);
    u = u.with((1.0 - gamma) * u.flat() + gamma * v.flat());
    hu = hvp(u);
    ++r.hvp_calls;
  }
  if (!u.is_zero()) {
    u = project_sphere(norm, u);
    hu = hvp(u);
    ++r.hvp_calls;
  }
  r.value = inner(u, hu);
  r.direction = std::move(u);
  r.h_direction = std::move(hu);
  return r;
}

}  // namespace

SharpnessEstimate sharpness_fw(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                               const FwConfig& cfg) {
  if (cfg.iterations < 1 || cfg.restarts < 1) throw Error(ErrorCode::kInvalidArgument, "FW needs K >= 1 and M >= 1");
  norm.check_dimension(layout->total_dim());

  std::vector<RestartResult> results(static_cast<std::size_t>(cfg.restarts));
  const int threads = std::max(1, std::min(cfg.threads, cfg.restarts));
  if (threads == 1) {
    for (int m = 0; m < cfg.restarts; ++m) results[static_cast<std::size_t>(m)] = fw_restart(hvp, layout, norm, cfg, m);
  } else {
    std::vector<std::future<void>> jobs;
    for (int t = 0; t < threads; ++t) {
      jobs.push_back(std::async(std::launch::async, [&, t] {
        for (int m = t; m < cfg.restarts; m += threads)
          results[static_cast<std::size_t>(m)] = fw_restart(hvp, layout, norm, cfg, m);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  SharpnessEstimate est;
  est.method = "frank_wolfe";
  est.restarts_used = cfg.restarts;
  std::size_t best = 0;
  for (std::size_t m = 0; m < results.size(); ++m) {
    est.restart_values.push_back(results[m].value);
    est.hvp_calls += results[m].hvp_calls;
    if (results[m].value > results[best].value) best = m;
  }
  est.value = results[best].value;
  est.direction = results[best].direction;
  est.fw_gap = 2.0 * (dual_norm(norm, results[best].h_direction) - est.value);
  return est;
}

// ---------------------------------------------------------------------------
// Power iteration

namespace {

// Lanczos with full reorthogonalization, restarted from the current Ritz
// vector every `kKrylov` steps. Converged when the top Ritz value moves by less
// than `tolerance` (relative) three checks in a row, or the Krylov space is
// invariant.
EigenEstimate lanczos_max(const std::function<Vector(const Vector&)>& apply, Index n, const PowerOptions& opt) {
  constexpr Index kKrylov = 60;
  RngState rng(opt.seed);
  Vector start = gaussian_vector(n, rng);
  start.normalize();
  EigenEstimate e;
  e.value = std::numeric_limits<double>::quiet_NaN();
  double prev = e.value;
  int settled = 0;
  int calls = 0;
  const Index cap = std::min<Index>(kKrylov, n);
  while (calls < opt.max_iterations) {
    Matrix q(n, cap + 1);
    q.col(0) = start;
    Vector alpha(cap), beta(cap);
    Index m = 0;
    bool invariant = false, done = false;
    Vector ritz;
    for (; m < cap && calls < opt.max_iterations;) {
      Vector w = apply(q.col(m));
      ++calls;
      alpha[m] = q.col(m).dot(w);
      for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(m + 1) * (q.leftCols(m + 1).transpose() * w);
      beta[m] = w.norm();
      ++m;
      const Eigen::SelfAdjointEigenSolver<Matrix> tri(
          Matrix(Matrix(alpha.head(m).asDiagonal()) + [&] {
            Matrix off = Matrix::Zero(m, m);
            for (Index i = 0; i + 1 < m; ++i) off(i, i + 1) = off(i + 1, i) = beta[i];
            return off;
          }()));
      const double theta = tri.eigenvalues()[m - 1];
      ritz = tri.eigenvectors().col(m - 1);
      e.value = theta;
      invariant = beta[m - 1] <= 1e-14 * std::max(std::abs(theta), 1e-300) || m == n;
      if (std::isfinite(prev) && std::abs(theta - prev) <= opt.tolerance * std::max(std::abs(theta), 1e-300)) {
        done = ++settled >= 3;
      } else {
        settled = 0;
      }
      prev = theta;
      if (invariant || done) break;
      q.col(m) = w / beta[m - 1];
    }
    start = (q.leftCols(m) * ritz).normalized();
    e.vector = start;
    if (invariant || done) break;
  }
  e.iterations = calls;
  return e;
}

}  // namespace

EigenEstimate lambda_max(const std::function<Vector(const Vector&)>& apply, Index n, const PowerOptions& opt) {
  return lanczos_max(apply, n, opt);
}

EigenEstimate lambda_min(const std::function<Vector(const Vector&)>& apply, Index n, const PowerOptions& opt) {
  EigenEstimate e = lambda_max([&](const Vector& v) { return Vector(-apply(v)); }, n, opt);
  e.value = -e.value;
  return e;
}

SharpnessEstimate sharpness_closed(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                                   const PowerOptions& opt) {
  const Index n = layout->total_dim();
  norm.check_dimension(n);
  SharpnessEstimate est;
  est.restarts_used = 1;
  int calls = 0;
  auto apply_full = [&](const Vector& v) {
    ++calls;
    return Vector(hvp(ParamVector(layout, v)).flat());
  };

  switch (norm.kind()) {
    case NormSpec::Kind::kEuclidean: {
      const EigenEstimate e = lambda_max(apply_full, n, opt);
      est.value = e.value;
      est.direction = ParamVector(layout, e.vector.normalized());
      est.method = "closed_l2";
      break;
    }
    case NormSpec::Kind::kPreconditioned: {
      // Symmetric similarity transform L^{-1} H L^{-T} with P = L L^T.
      auto apply_white = [&](const Vector& v) { return Vector(norm.inv_sqrt(apply_full(norm.inv_sqrt_transpose(v)))); };
      const EigenEstimate e = lambda_max(apply_white, n, opt);
      est.value = e.value;
      est.direction = ParamVector(layout, norm.inv_sqrt_transpose(e.vector.normalized()));
      est.method = "closed_preconditioned";
      break;
    }
    case NormSpec::Kind::kBlockL12: {
      est.value = -std::numeric_limits<double>::infinity();
      for (const auto& b : norm.blocks()) {
        auto apply_block = [&](const Vector& v) {
          Vector full = Vector::Zero(n);
          full.segment(b.offset, b.size()) = v;
          return Vector(apply_full(full).segment(b.offset, b.size()));
        };
        const EigenEstimate e = lambda_max(apply_block, b.size(), opt);
        if (e.value > est.value) {
          est.value = e.value;
          Vector dir = Vector::Zero(n);
          dir.segment(b.offset, b.size()) = e.vector.normalized();
          est.direction = ParamVector(layout, std::move(dir));
        }
      }
      if (opt.check_psd) {
        const EigenEstimate low = lambda_min(apply_full, n, opt);
        est.psd_only = low.value < -1e-10 * std::max(1.0, std::abs(est.value));
      }
      est.method = "closed_block_l12";
      break;
    }
    default:
      throw Error(ErrorCode::kUnsupported, "no closed-form sharpness for " + norm.name());
  }
  const ParamVector hd = hvp(est.direction);
  ++calls;
  est.value = inner(est.direction, hd);
  est.restart_values = {est.value};
  est.fw_gap = 2.0 * (dual_norm(norm, hd) - est.value);
  est.hvp_calls = calls;
  return est;
}

// ---------------------------------------------------------------------------

BruteForceResult sharpness_bruteforce_linf(const Matrix& h) {
  const Index n = h.rows();
  if (n != h.cols() || n < 1) throw Error(ErrorCode::kInvalidArgument, "square Hessian required");
  if (n > 22) throw Error(ErrorCode::kUnsupported, "enumeration limited to n <= 22");
  // Gray-code walk over half the cube (d and -d give the same value).
  Vector d = Vector::Ones(n);
  Vector hd = h * d;
  double value = d.dot(hd);
  BruteForceResult best{value, d};
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  for (std::uint64_t k = 1; k < count; ++k) {
    const int bit = std::countr_zero(k) + 1;  // coordinate 0 stays fixed at +1
    const double di = d[bit];
    value += -4.0 * di * hd[bit] + 4.0 * h(bit, bit);
    hd -= 2.0 * di * h.col(bit);
    d[bit] = -di;
    if (value > best.value) best = {value, d};
  }
  // Re-evaluate to drop accumulated rounding.
  best.value = best.argmax.dot(h * best.argmax);
  return best;
}

double fw_gap(const ParamVector& u, const HvpOracle& hvp, const NormSpec& norm) {
  const ParamVector hu = hvp(u);
  return 2.0 * (dual_norm(norm, hu) - inner(u, hu));
}

SharpnessEstimate projected_power_iteration(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                                            int iterations, std::uint64_t seed) {
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations must be positive");
  RngState rng(seed);
  SharpnessEstimate est;
  est.method = "projected_power";
  est.value = -std::numeric_limits<double>::infinity();
  ParamVector u = project_sphere(norm, gaussian_like(layout, rng));
  for (int it = 0; it < iterations; ++it) {
    ParamVector hu = hvp(u);
    ++est.hvp_calls;
    const double value = inner(u, hu);
    if (value > est.value) {
      est.value = value;
      est.direction = u;
      est.fw_gap = 2.0 * (dual_norm(norm, hu) - value);
    }
    if (hu.is_zero()) {
      ++est.restarts_used;
      u = project_sphere(norm, gaussian_like(layout, rng));
      continue;
    }
    u = project_sphere(norm, hu);
  }
  est.restarts_used += 1;
  est.restart_values = {est.value};
  return est;
}

double directional_curvature(const Objective& obj, const ParamVector& w, const ParamVector& d) {
  return inner(d, obj.hvp(w, d));
}

SharpnessEstimate estimate_sharpness(const HvpOracle& hvp, const LayoutPtr& layout, const NormSpec& norm,
                                     SharpnessMethod method, const FwConfig& fw, const PowerOptions& power) {
  const bool closed_available = norm.kind() == NormSpec::Kind::kEuclidean ||
                                norm.kind() == NormSpec::Kind::kPreconditioned ||
                                norm.kind() == NormSpec::Kind::kBlockL12;
  if (method == SharpnessMethod::kClosed) return sharpness_closed(hvp, layout, norm, power);
  if (method == SharpnessMethod::kAuto && closed_available && norm.kind() != NormSpec::Kind::kBlockL12)
    return sharpness_closed(hvp, layout, norm, power);
  return sharpness_fw(hvp, layout, norm, fw);
}

}  // namespace neos
