#include "neos/quadlab.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <future>
#include <limits>

#include "neos/spectra.hpp"

namespace neos {

namespace {

// Deterministic sign: largest-magnitude entry positive.
Vector canonical_sign(Vector v) {
  Index i = 0;
  v.cwiseAbs().maxCoeff(&i);
  return v[i] < 0 ? Vector(-v) : v;
}

bool is_psd(const Matrix& h) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

// min over v != 0 of v^T H v / ||v||^2 by multistart compass search.
double rayleigh_min_pattern(const Matrix& h, const NormSpec& norm, const LayoutPtr& layout, std::uint64_t seed,
                            int starts) {
  const Index n = h.rows();
  auto f = [&](const Vector& v) {
    const double len = norm_value(norm, ParamVector(layout, v));
    return len > 0 ? v.dot(h * v) / (len * len) : std::numeric_limits<double>::infinity();
  };
  RngState rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    // f is scale invariant, so iterates are only rescaled radially.
    auto unit = [&](const Vector& c) { return Vector(c / norm_value(norm, ParamVector(layout, c))); };
    Vector v = unit(gaussian_like(layout, rng).flat());
    double fv = f(v);
    int sweeps = 0;
    for (double step = 0.5; step > 1e-10 && sweeps < 100000; ++sweeps) {
      bool moved = false;
      for (Index i = 0; i < n; ++i) {
        for (const double sgn : {1.0, -1.0}) {
          Vector c = v;
          c[i] += sgn * step;
          const double fc = f(c);
          if (fc < fv) {
            v = unit(c);
            fv = fc;
            moved = true;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    best = std::min(best, fv);
  }
  return best;
}

}  // namespace

Matrix random_pd(Index d, double cond, RngState& rng) {
  if (d < 1 || !(cond >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "random_pd needs d >= 1 and cond >= 1");
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  const Matrix q = qr.householderQ();
  Vector lambda(d);
  for (Index i = 0; i < d; ++i) {
    const double u = d == 1 ? 0.0 : (i == 0 ? 0.0 : (i == d - 1 ? 1.0 : rng.uniform()));
    lambda[i] = std::pow(cond, u);
  }
  const Matrix h = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

QuadCase oracle_constants(const Matrix& h_in, const NormSpec& norm, LayoutPtr layout, const OracleOptions& opt) {
  if (h_in.rows() != h_in.cols()) throw Error(ErrorCode::kInvalidArgument, "square H required");
  const Index n = h_in.rows();
  if (!layout) layout = BlockLayout::flat(n);
  if (layout->total_dim() != n) throw Error(ErrorCode::kLayoutMismatch, "oracle layout dimension");
  norm.check_dimension(n);

  QuadCase qc;
  qc.h = 0.5 * (h_in + h_in.transpose());
  qc.norm = norm;
  qc.layout = layout;
  const Matrix& h = qc.h;

  FwConfig fw;
  fw.iterations = opt.fw_iterations;
  fw.restarts = opt.fw_restarts;
  fw.seed = opt.seed;

  switch (norm.kind()) {
    case NormSpec::Kind::kEuclidean: {
      const Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      qc.s = es.eigenvalues()[n - 1];
      qc.mu = es.eigenvalues()[0];
      qc.dhat = ParamVector(layout, canonical_sign(es.eigenvectors().col(n - 1)));
      qc.s_exact = qc.mu_exact = true;
      qc.s_method = qc.mu_method = "eigen";
      break;
    }
    case NormSpec::Kind::kPreconditioned: {
      const Matrix p = norm.preconditioner_matrix(n);
      const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(h, p);
      qc.s = es.eigenvalues()[n - 1];
      qc.mu = es.eigenvalues()[0];
      Vector d = canonical_sign(es.eigenvectors().col(n - 1));
      d /= std::sqrt(d.dot(p * d));
      qc.dhat = ParamVector(layout, d);
      qc.s_exact = qc.mu_exact = true;
      qc.s_method = qc.mu_method = "generalized_eigen";
      break;
    }
    case NormSpec::Kind::kLinf: {
      if (n <= opt.linf_enumeration_max) {
        const BruteForceResult bf = sharpness_bruteforce_linf(h);
        qc.s = bf.value;
        qc.dhat = ParamVector(layout, bf.argmax);
        qc.s_exact = true;
        qc.s_method = "enumeration";
      } else {
        const SharpnessEstimate e = sharpness_fw(matrix_hvp(h, layout), layout, norm, fw);
        qc.s = e.value;
        qc.dhat = e.direction;
        qc.s_method = "frank_wolfe";
      }
      // min over the l_inf sphere = 1 / max over the l1 ball of y^T H^-1 y,
      // attained at a vertex +-e_i.
      const Eigen::LLT<Matrix> llt(h);
      if (llt.info() != Eigen::Success) throw Error(ErrorCode::kInvalidArgument, "l_inf mu oracle needs PD H");
      const Matrix hinv = llt.solve(Matrix::Identity(n, n));
      qc.mu = 1.0 / hinv.diagonal().maxCoeff();
      qc.mu_exact = true;
      qc.mu_method = "dual_vertex";
      break;
    }
    case NormSpec::Kind::kBlockL12: {
      if (is_psd(h)) {
        qc.s = -std::numeric_limits<double>::infinity();
        for (const auto& b : norm.blocks()) {
          const Eigen::SelfAdjointEigenSolver<Matrix> es(h.block(b.offset, b.offset, b.size(), b.size()));
          const double top = es.eigenvalues()[b.size() - 1];
          if (top > qc.s) {
            qc.s = top;
            Vector d = Vector::Zero(n);
            d.segment(b.offset, b.size()) = canonical_sign(es.eigenvectors().col(b.size() - 1));
            qc.dhat = ParamVector(layout, d);
          }
        }
        qc.s_exact = true;
        qc.s_method = "block_eigen";
      } else {
        const SharpnessEstimate e = sharpness_fw(matrix_hvp(h, layout), layout, norm, fw);
        qc.s = e.value;
        qc.dhat = e.direction;
        qc.s_method = "frank_wolfe";
      }
      // Dual problem in the max-of-block-l2 norm, i.e. spectral max over columns.
      const Eigen::LLT<Matrix> llt(h);
      if (llt.info() == Eigen::Success) {
        std::vector<std::pair<Index, Index>> columns;
        for (const auto& b : norm.blocks()) columns.emplace_back(b.size(), 1);
        const NormSpec dual_geometry = NormSpec::spectral_max(columns);
        const LayoutPtr flat = BlockLayout::flat(n);
        const Matrix hinv = llt.solve(Matrix::Identity(n, n));
        const SharpnessEstimate e = sharpness_fw(matrix_hvp(hinv, flat), flat, dual_geometry, fw);
        qc.mu = 1.0 / e.value;
        qc.mu_method = "dual_frank_wolfe";
      } else {
        qc.mu = rayleigh_min_pattern(h, norm, layout, opt.seed, 32);
        qc.mu_method = "pattern_search";
      }
      break;
    }
    case NormSpec::Kind::kSpectralMax:
    case NormSpec::Kind::kSpectralSum: {
      const SharpnessEstimate e = sharpness_fw(matrix_hvp(h, layout), layout, norm, fw);
      qc.s = e.value;
      qc.dhat = e.direction;
      qc.s_method = "frank_wolfe";
      qc.mu = rayleigh_min_pattern(h, norm, layout, opt.seed, 32);
      qc.mu_method = "pattern_search";
      break;
    }
  }
  return qc;
}

InvariantReport verify_invariant_direction(const Matrix& h, const NormSpec& norm, const ParamVector& dhat, double s,
                                           double tol) {
  InvariantReport r;
  const ParamVector hd = dhat.with(h * dhat.flat());
  const ParamVector v = dual_vector(norm, hd);
  r.residual = (v.flat() - dhat.flat()).cwiseAbs().maxCoeff();
  r.attainment = std::abs(v.flat().dot(h * v.flat()) - s) / std::max(std::abs(s), 1e-300);
  const double own = std::abs(dhat.flat().dot(h * dhat.flat()) - s) / std::max(std::abs(s), 1e-300);
  if (own > 1e-8) {
    r.note = "dhat does not attain S";
  } else if (r.residual <= tol) {
    r.passed = true;
    r.note = "invariant";
  } else if (r.attainment <= 1e-8) {
    r.tie = true;
    r.passed = true;
    r.note = "tie: dual image is a different maximizer";
  } else {
    r.note = "dual image is not a maximizer";
  }
  return r;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kConverged:
      return "converged";
    case Outcome::kDiverged:
      return "diverged";
    case Outcome::kOscillating:
      return "oscillating";
  }
  return "unknown";
}

Trajectory simulate(const QuadCase& qc, double eta, const Vector& w0, int t_max, bool keep_iterates) {
  if (t_max < 1) throw Error(ErrorCode::kInvalidArgument, "T must be >= 1");
  const QuadraticObjective obj(qc.h, qc.layout);
  OptimizerSpec spec;
  spec.norm = qc.norm;
  spec.eta = eta;

  Trajectory tr;
  ParamVector w(qc.layout, w0);
  tr.initial_loss = obj.loss(w);
  tr.losses.push_back(tr.initial_loss);
  if (keep_iterates) tr.iterates.push_back(w.flat());
  const double l0 = tr.initial_loss;
  if (l0 == 0.0) {
    tr.outcome = Outcome::kConverged;
    return tr;
  }
  for (int t = 0; t < t_max; ++t) {
    StepResult r = step(obj, w, spec);
    w = std::move(r.w);
    ++tr.steps;
    const double l = r.record.loss_after;
    tr.losses.push_back(l);
    if (keep_iterates) tr.iterates.push_back(w.flat());
    if (!std::isfinite(l) || l > kDivergedRatio * l0 || r.record.diverged) {
      tr.outcome = Outcome::kDiverged;
      break;
    }
    if (l < kConvergedRatio * l0 || r.record.stationary) {
      tr.outcome = Outcome::kConverged;
      break;
    }
  }
  tr.final_loss = tr.losses.back();
  return tr;
}

std::vector<StabilityRow> stability_diagram(const QuadCase& qc, const std::vector<double>& etas, int t_max,
                                            std::uint64_t seed, int threads) {
  std::vector<StabilityRow> rows(2 * etas.size());
  auto cell = [&](std::size_t k) {
    const std::size_t i = k / 2;
    StabilityRow& row = rows[k];
    row.eta = etas[i];
    Vector w0;
    if (k % 2 == 0) {
      row.init = "dhat";
      w0 = qc.dhat.flat();
    } else {
      row.init = "random";
      RngState rng = RngState(seed).fork(i);
      w0 = gaussian_vector(qc.h.rows(), rng);
    }
    const Trajectory tr = simulate(qc, etas[i], w0, t_max);
    row.outcome = tr.outcome;
    row.steps = tr.steps;
    row.final_ratio = tr.final_loss / tr.initial_loss;
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
  if (workers == 1) {
    for (std::size_t k = 0; k < rows.size(); ++k) cell(k);
  } else {
    std::vector<std::future<void>> jobs;
    for (int t = 0; t < workers; ++t)
      jobs.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t k = static_cast<std::size_t>(t); k < rows.size(); k += static_cast<std::size_t>(workers)) cell(k);
      }));
    for (auto& j : jobs) j.get();
  }
  return rows;
}

double bisect_threshold(const QuadCase& qc, double lo, double hi, int t_max, int iterations) {
  auto stable = [&](double eta) { return simulate(qc, eta, qc.dhat.flat(), t_max).outcome == Outcome::kConverged; };
  if (!stable(lo)) throw Error(ErrorCode::kInvalidArgument, "bisection: lower end is not stable");
  if (stable(hi)) throw Error(ErrorCode::kInvalidArgument, "bisection: upper end is stable");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (stable(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<int> oscillation_indicators(const std::vector<Vector>& iterates, const Vector& dhat) {
  std::vector<int> out;
  for (std::size_t t = 1; t + 1 < iterates.size(); ++t) {
    const double a = (iterates[t + 1] - iterates[t]).dot(dhat);
    const double b = (iterates[t] - iterates[t - 1]).dot(dhat);
    out.push_back(a * b < 0.0 ? 1 : 0);
  }
  return out;
}

SwitchCurves taylor_switch(const ObjectivePtr& obj, const ParamVector& w_t0, int t0, const OptimizerSpec& spec,
                           int horizon, double perturb, const ParamVector& direction) {
  if (horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  const auto taylor = make_taylor(obj, w_t0);
  ParamVector start = w_t0;
  if (perturb != 0.0) {
    require_same_layout(direction.layout(), w_t0.layout(), "taylor perturbation");
    start = axpy(perturb, direction, w_t0);
  }
  RunOptions opt;
  opt.steps = horizon;
  opt.cadence = 0;
  auto curve = [](const RunResult& r) {
    std::vector<double> c;
    for (const auto& rec : r.records) c.push_back(rec.loss_before);
    if (!r.records.empty()) c.push_back(r.records.back().loss_after);
    return c;
  };
  SwitchCurves out;
  out.switch_step = t0;
  out.true_loss = curve(run(*obj, w_t0, spec, opt));
  out.taylor_loss = curve(run(*taylor, start, spec, opt));
  return out;
}

}  // namespace neos
