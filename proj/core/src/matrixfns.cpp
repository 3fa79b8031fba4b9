#include "neos/matrixfns.hpp"

#include <string>

namespace neos {

namespace {

void require_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) throw Error(ErrorCode::kNonFinite, where);
}

// One odd polynomial step X <- a X + b (X X^T) X + c (X X^T)^2 X, using the
// Gram matrix on the smaller side.
Matrix odd_poly_step(const Matrix& x, double a, double b, double c) {
  if (x.rows() >= x.cols()) {
    const Matrix gram = x.transpose() * x;
    Matrix poly = b * gram;
    if (c != 0.0) poly.noalias() += c * gram * gram;
    poly.diagonal().array() += a;
    return x * poly;
  }
  const Matrix gram = x * x.transpose();
  Matrix poly = b * gram;
  if (c != 0.0) poly.noalias() += c * gram * gram;
  poly.diagonal().array() += a;
  return poly * x;
}

}  // namespace

PolarMethod PolarMethod::newton_schulz(int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "Newton-Schulz needs at least one step");
  PolarMethod m;
  m.kind = Kind::kNewtonSchulz;
  m.steps = steps;
  return m;
}

PolarMethod PolarMethod::polar_express(int steps, std::vector<Triple> schedule) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "PolarExpress needs at least one step");
  PolarMethod m;
  m.kind = Kind::kPolarExpress;
  m.steps = steps;
  m.schedule = schedule.empty() ? default_polar_express_schedule() : std::move(schedule);
  return m;
}

const std::vector<PolarMethod::Triple>& default_polar_express_schedule() {
  // Each triple minimizes max |p(x) - 1| over the interval left by the
  // previous step, starting from [0.01, 1].
  static const std::vector<PolarMethod::Triple> schedule = {
      {8.0839809448349378, -23.540732810733914, 17.375935579161137},
      {3.6360242665164906, -2.7194008361176607, 0.53558771194315358},
      {2.6629525308599082, -1.9787109718569496, 0.4528771210737732},
      {1.9564513335209144, -1.3376386986101358, 0.38374152410963536},
      {1.8751680659926726, -1.2501866353857642, 0.37501858137052824},
      {1.875, -1.25, 0.375},
  };
  return schedule;
}

Svd svd_small(const Matrix& m) {
  require_finite(m, "svd_small");
  if (std::min(m.rows(), m.cols()) > 512)
    throw Error(ErrorCode::kUnsupported, "svd_small is limited to min(rows, cols) <= 512");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

double nuclear_norm(const Matrix& m) {
  require_finite(m, "nuclear_norm");
  if (m.size() == 0) return 0.0;
  return svd_small(m).sigma.sum();
}

double spectral_norm(const Matrix& m) {
  require_finite(m, "spectral_norm");
  if (m.size() == 0) return 0.0;
  if (m.cols() == 1) return m.norm();
  return svd_small(m).sigma(0);
}

Matrix polar_factor(const Matrix& m, const PolarMethod& method) {
  require_finite(m, "polar_factor");
  const double fro = m.norm();
  if (fro == 0.0) throw Error(ErrorCode::kZeroVector, "polar factor of a zero matrix");

  switch (method.kind) {
    case PolarMethod::Kind::kExactSvd: {
      if (m.cols() == 1) return m / fro;
      const Svd svd = svd_small(m);
      const double cutoff = 1e-12 * svd.sigma(0);
      Index rank = 0;
      while (rank < svd.sigma.size() && svd.sigma(rank) > cutoff) ++rank;
      return svd.u.leftCols(rank) * svd.v.leftCols(rank).transpose();
    }
    case PolarMethod::Kind::kNewtonSchulz: {
      Matrix x = m / fro;
      for (int k = 0; k < method.steps; ++k) x = odd_poly_step(x, 1.5, -0.5, 0.0);
      return x;
    }
    case PolarMethod::Kind::kPolarExpress: {
      const auto& sched = method.schedule.empty() ? default_polar_express_schedule() : method.schedule;
      Matrix x = m / fro;
      for (int k = 0; k < method.steps; ++k) {
        const auto& t = sched[std::min<std::size_t>(static_cast<std::size_t>(k), sched.size() - 1)];
        x = odd_poly_step(x, t[0], t[1], t[2]);
      }
      return x;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown polar method");
}

}  // namespace neos
