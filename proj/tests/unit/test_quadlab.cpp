#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "neos/quadlab.hpp"

using namespace neos;

TEST(Oracle, HandValues) {
  const Matrix h = Vector2(3, 1).asDiagonal();
  const auto l2 = oracle_constants(h, NormSpec::euclidean());
  EXPECT_NEAR(l2.s, 3, 1e-14);
  EXPECT_NEAR(l2.mu, 1, 1e-14);
  EXPECT_NEAR(std::abs(l2.dhat[0]), 1, 1e-14);
  const auto linf = oracle_constants(h, NormSpec::linf());
  EXPECT_EQ(linf.s, 4);
  EXPECT_NEAR(linf.mu, 1, 1e-14);
  EXPECT_TRUE(linf.mu_exact);
  const auto block = oracle_constants(Vector3(2, 1, 3).asDiagonal(), NormSpec::block_l12(std::vector<Index>{2, 1}));
  EXPECT_NEAR(block.s, 3, 1e-14);
  EXPECT_TRUE(block.s_exact);
}

namespace {

// min v^T H v over the face v_i = 1, |v_j| <= 1: a convex box QP, solved by
// exact coordinate minimization.
double face_min(const Matrix& h, Index i) {
  Vector v = Vector::Zero(h.rows());
  v[i] = 1;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double moved = 0;
    for (Index j = 0; j < h.rows(); ++j) {
      if (j == i) continue;
      const double off = h.row(j).dot(v) - h(j, j) * v[j];
      const double next = std::clamp(-off / h(j, j), -1.0, 1.0);
      moved = std::max(moved, std::abs(next - v[j]));
      v[j] = next;
    }
    if (moved < 1e-15) break;
  }
  return v.dot(h * v);
}

}  // namespace

TEST(Oracle, LinfMuAgainstFaceQps) {
  RngState rng(1);
  for (int t = 0; t < 5; ++t) {
    const Matrix h = fixtures::random_pd(5, 10, rng);
    const auto qc = oracle_constants(h, NormSpec::linf());
    double best = 1e300;
    for (Index i = 0; i < 5; ++i) best = std::min(best, face_min(h, i));
    EXPECT_NEAR(qc.mu, best, 1e-10 * best);
  }
}

TEST(Oracle, PreconditionedMatchesTransformedEuclidean) {
  RngState rng(2);
  const Matrix h = fixtures::random_pd(6, 10, rng);
  Vector p(6);
  p << 1, 2, 3, 0.5, 4, 1.5;
  const auto qc = oracle_constants(h, NormSpec::preconditioned_diagonal(p));
  const Matrix t = p.cwiseSqrt().cwiseInverse().asDiagonal() * h * p.cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(t);
  EXPECT_NEAR(qc.s, es.eigenvalues().maxCoeff(), 1e-10);
  EXPECT_NEAR(qc.mu, es.eigenvalues().minCoeff(), 1e-10);
  EXPECT_NEAR(norm_value(qc.norm, qc.dhat), 1.0, 1e-12);
}

TEST(Oracle, ApproximateGeometriesAreBracketed) {
  RngState rng(3);
  const Matrix h = fixtures::random_pd(8, 10, rng);
  for (const auto& [name, n] : fixtures::quadratic_geometries()) {
    const auto qc = oracle_constants(h, n);
    EXPECT_GT(qc.mu, 0) << name;
    EXPECT_LE(qc.mu, qc.s) << name;
    EXPECT_NEAR(qc.dhat.flat().dot(h * qc.dhat.flat()), qc.s, 1e-9 * qc.s) << name;
    EXPECT_NEAR(norm_value(n, qc.dhat), 1.0, 1e-10) << name;
  }
}

TEST(Invariant, HandCases) {
  const Matrix h = Vector2(3, 1).asDiagonal();
  const auto l = BlockLayout::flat(2);
  const auto r = verify_invariant_direction(h, NormSpec::euclidean(), ParamVector(l, Vector2(1, 0)), 3);
  EXPECT_EQ(r.residual, 0);
  EXPECT_TRUE(r.passed);
  Matrix h2(2, 2);
  h2 << 2, 1, 1, 2;
  EXPECT_EQ(verify_invariant_direction(h2, NormSpec::linf(), ParamVector(l, Vector2(1, 1)), 6).residual, 0);
  // Isotropic: every unit vector is a maximizer.
  const auto iso = verify_invariant_direction(Matrix::Identity(2, 2), NormSpec::linf(), ParamVector(l, Vector2(1, 1)), 2);
  EXPECT_TRUE(iso.passed);
  // e2 is a fixed point of the dual map but not a maximizer.
  EXPECT_FALSE(verify_invariant_direction(h, NormSpec::euclidean(), ParamVector(l, Vector2(0, 1)), 3).passed);
  const auto bad = verify_invariant_direction(h2, NormSpec::linf(), ParamVector(l, Vector2(1, 0)), 6);
  EXPECT_EQ(bad.residual, 1);
  EXPECT_FALSE(bad.passed);
}

TEST(Simulate, RateAtOneOverS) {
  const Matrix h = Vector3(3, 2, 1).asDiagonal();
  const auto qc = oracle_constants(h, NormSpec::euclidean());
  const double eta = 1 / qc.s;
  const auto tr = simulate(qc, eta, Vector3(1, -1, 2), 5000);
  EXPECT_EQ(tr.outcome, Outcome::kConverged);
  const double rate = 1 - 2 * qc.mu * eta * (1 - eta * qc.s / 2);
  for (std::size_t t = 0; t < tr.losses.size(); ++t)
    EXPECT_LE(tr.losses[t], std::pow(rate, static_cast<double>(t)) * tr.initial_loss + 1e-12);
}

TEST(Simulate, ClosedFormAlongMaximizer) {
  RngState rng(4);
  const Matrix h = fixtures::random_pd(8, 10, rng);
  const auto qc = oracle_constants(h, NormSpec::linf());
  const double eta = 2.2 / qc.s;
  const auto tr = simulate(qc, eta, qc.dhat.flat(), 30, true);
  for (int t = 0; t <= 30 && t < static_cast<int>(tr.iterates.size()); ++t) {
    const Vector expected = std::pow(1 - eta * qc.s, t) * qc.dhat.flat();
    EXPECT_LE((tr.iterates[t] - expected).norm(), 1e-8 * expected.norm());
  }
}

TEST(Simulate, DivergesBeyondTwoOverMu) {
  RngState rng(5);
  const auto qc = oracle_constants(fixtures::random_pd(6, 10, rng), NormSpec::euclidean());
  EXPECT_EQ(simulate(qc, 2.2 / qc.mu, gaussian_vector(6, rng), 500).outcome, Outcome::kDiverged);
  EXPECT_THROW(simulate(qc, 0.1, gaussian_vector(6, rng), 0), Error);
}

TEST(Stability, DiagramAndBisection) {
  const auto qc = oracle_constants(Vector2(3, 1).asDiagonal(), NormSpec::euclidean());
  const std::vector<double> etas{0.3, 0.6, 2.0 / 3 * (1 - 2e-3), 2.0 / 3 * (1 + 2e-3), 0.9};
  const auto rows = stability_diagram(qc, etas, 20000, 1, 2);
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& r : rows) {
    if (r.init != "dhat") continue;
    EXPECT_EQ(r.outcome, r.eta < 2.0 / 3 ? Outcome::kConverged : Outcome::kDiverged) << r.eta;
  }
  const double eta_star = bisect_threshold(qc, 0.5, 1.0, 20000);
  EXPECT_NEAR(eta_star * qc.s / 2, 1.0, 1e-3);
}

TEST(Oscillation, IndicatorsAlternateAboveThreshold) {
  const auto qc = oracle_constants(Vector2(3, 1).asDiagonal(), NormSpec::euclidean());
  const auto tr = simulate(qc, 0.5, qc.dhat.flat(), 10, true);
  const auto ind = oscillation_indicators(tr.iterates, qc.dhat.flat());
  for (int v : ind) EXPECT_EQ(v, 1);
  const auto calm = simulate(qc, 0.2, qc.dhat.flat(), 10, true);
  for (int v : oscillation_indicators(calm.iterates, qc.dhat.flat())) EXPECT_EQ(v, 0);
}

TEST(TaylorSwitch, QuadraticCurvesCoincide) {
  RngState rng(6);
  auto q = std::make_shared<const QuadraticObjective>(fixtures::random_pd(5, 10, rng));
  OptimizerSpec spec;
  spec.eta = 0.05;
  spec.norm = NormSpec::linf();
  const auto c = taylor_switch(q, gaussian_like(q->layout(), rng), 0, spec, 50);
  ASSERT_EQ(c.true_loss.size(), c.taylor_loss.size());
  for (std::size_t i = 0; i < c.true_loss.size(); ++i)
    EXPECT_NEAR(c.true_loss[i], c.taylor_loss[i], 1e-10 * (1 + c.true_loss[i]));
}
