#include <gtest/gtest.h>

#include "neos/norms.hpp"

using namespace neos;

namespace {

ParamVector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return ParamVector(BlockLayout::flat(v.size()), v);
}

// One geometry of each kind on R^8.
std::vector<NormSpec> all_geometries() {
  Matrix p = Matrix::Identity(8, 8) * 2.0;
  p(0, 1) = p(1, 0) = 0.5;
  Vector diag(8);
  diag << 1, 2, 3, 4, 0.5, 1.5, 2.5, 0.25;
  return {NormSpec::euclidean(),
          NormSpec::preconditioned(p),
          NormSpec::preconditioned_diagonal(diag),
          NormSpec::linf(),
          NormSpec::block_l12(std::vector<Index>{3, 3, 2}),
          NormSpec::spectral_max({{2, 2}, {2, 2}}),
          NormSpec::spectral_sum({{2, 2}, {2, 2}})};
}

}  // namespace

TEST(NormValue, HandValues) {
  EXPECT_EQ(norm_value(NormSpec::linf(), vec({1, -2, 3})), 3.0);
  EXPECT_EQ(norm_value(NormSpec::block_l12(std::vector<Index>{2, 1}), vec({3, 4, 0})), 5.0);
  EXPECT_NEAR(norm_value(NormSpec::spectral_max({{2, 2}}), vec({2, 0, 0, 0.5})), 2.0, 1e-14);
  EXPECT_NEAR(norm_value(NormSpec::spectral_sum({{2, 2}, {1, 1}}), vec({2, 0, 0, 0.5, -3})), 5.0, 1e-14);
}

TEST(DualNorm, HandValues) {
  EXPECT_EQ(dual_norm(NormSpec::euclidean(), vec({3, 4})), 5.0);
  EXPECT_EQ(dual_norm(NormSpec::linf(), vec({1, -2, 3})), 6.0);
  EXPECT_NEAR(dual_norm(NormSpec::spectral_max({{2, 2}}), vec({2, 0, 0, -1})), 3.0, 1e-14);
}

TEST(DualVector, HandValues) {
  EXPECT_EQ(dual_vector(NormSpec::euclidean(), vec({3, 4})).flat(), vec({0.6, 0.8}).flat());
  EXPECT_EQ(dual_vector(NormSpec::linf(), vec({1, -2, 0})).flat(), vec({1, -1, 0}).flat());
  EXPECT_LT((dual_vector(NormSpec::spectral_max({{2, 2}}), vec({2, 0, 0, -1})).flat() - vec({1, 0, 0, -1}).flat())
                .norm(),
            1e-14);
}

TEST(DualVector, ZeroThrows) {
  try {
    dual_vector(NormSpec::euclidean(), vec({0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
  }
}

TEST(Lmo, HandValues) {
  EXPECT_EQ(lmo(NormSpec::euclidean(), vec({0, 1})).flat(), vec({0, -1}).flat());
  EXPECT_EQ(lmo(NormSpec::linf(), vec({2, -3})).flat(), vec({-1, 1}).flat());
  EXPECT_EQ(lmo(NormSpec::block_l12(std::vector<Index>{2, 1}), vec({3, 4, 5})).flat(), vec({-0.6, -0.8, 0}).flat());
  EXPECT_TRUE(lmo(NormSpec::linf(), vec({0, 0})).is_zero());
}

TEST(ProjectSphere, HandValues) {
  EXPECT_LT((project_sphere(NormSpec::euclidean(), vec({3, 4})).flat() - vec({0.6, 0.8}).flat()).norm(), 1e-15);
  EXPECT_EQ(project_sphere(NormSpec::linf(), vec({0.2, -5})).flat(), vec({1, -1}).flat());
  EXPECT_LT((project_sphere(NormSpec::spectral_max({{2, 2}}), vec({3, 0, 0, 0.5})).flat() - vec({1, 0, 0, 1}).flat())
                .norm(),
            1e-14);
  EXPECT_THROW(project_sphere(NormSpec::linf(), vec({0, 0})), Error);
}

TEST(ProjectSphere, UnitNormEveryGeometry) {
  const auto l = BlockLayout::flat(8);
  RngState rng(21);
  for (const auto& n : all_geometries()) {
    for (int i = 0; i < 50; ++i) EXPECT_NEAR(norm_value(n, project_sphere(n, gaussian_like(l, rng))), 1.0, 1e-10) << n.name();
  }
}

TEST(Duality, CauchySchwarzAndAttainment) {
  const auto l = BlockLayout::flat(8);
  RngState rng(17);
  for (const auto& n : all_geometries()) {
    for (int i = 0; i < 1000; ++i) {
      const auto g = gaussian_like(l, rng), v = gaussian_like(l, rng);
      EXPECT_GE(dual_norm(n, g) * norm_value(n, v) - inner(g, v), -1e-12) << n.name();
    }
    for (int i = 0; i < 100; ++i) {
      const auto g = gaussian_like(l, rng);
      const auto y = dual_vector(n, g);
      EXPECT_NEAR(inner(g, y), dual_norm(n, g), 1e-10 * dual_norm(n, g)) << n.name();
      EXPECT_NEAR(norm_value(n, y), 1.0, 1e-10) << n.name();
    }
  }
}

TEST(Duality, ScaleInvariantDualMap) {
  const auto l = BlockLayout::flat(8);
  RngState rng(18);
  for (const auto& n : all_geometries()) {
    const auto g = gaussian_like(l, rng);
    EXPECT_LT((dual_vector(n, scale(7.5, g)).flat() - dual_vector(n, g).flat()).norm(), 1e-12) << n.name();
  }
}

TEST(Specialization, SingletonBlocksAndScalarMatrices) {
  const auto l = BlockLayout::flat(6);
  RngState rng(19);
  const auto g = gaussian_like(l, rng);
  EXPECT_NEAR(dual_norm(NormSpec::block_l12(std::vector<Index>(6, 1)), g), g.flat().cwiseAbs().maxCoeff(), 1e-14);
  const std::vector<std::pair<Index, Index>> ones(6, {1, 1});
  EXPECT_NEAR(dual_norm(NormSpec::spectral_max(ones), g), g.flat().cwiseAbs().sum(), 1e-13);
}

TEST(Preconditioned, DualNormMatchesDenseSolve) {
  RngState rng(20);
  const Matrix a = gaussian_matrix(5, 5, rng);
  const Matrix p = a * a.transpose() + Matrix::Identity(5, 5);
  const auto n = NormSpec::preconditioned(p);
  const auto g = gaussian_like(BlockLayout::flat(5), rng);
  const double oracle = g.flat().dot(p.ldlt().solve(g.flat()));
  EXPECT_NEAR(dual_norm(n, g) * dual_norm(n, g), oracle, 1e-10 * oracle);
  // L^{-T} maps the l2 sphere onto the P sphere.
  const Vector u = gaussian_vector(5, rng).normalized();
  const Vector w = n.inv_sqrt_transpose(u);
  EXPECT_NEAR(w.dot(p * w), 1.0, 1e-12);
}

TEST(Preconditioned, RejectsBadMatrices) {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-6;
  EXPECT_THROW(NormSpec::preconditioned(asym), Error);
  EXPECT_THROW(NormSpec::preconditioned(Vector2(1, -1).asDiagonal().toDenseMatrix()), Error);
  EXPECT_THROW(NormSpec::preconditioned_diagonal(Vector2(1, 0)), Error);
}

TEST(BlockTies, LowestIndexWins) {
  const auto n = NormSpec::block_l12(std::vector<Index>{2, 1});
  EXPECT_EQ(dual_vector(n, vec({3, 4, 5})).flat(), vec({0.6, 0.8, 0}).flat());
  EXPECT_EQ(dual_vector(n, vec({3, 4, -6})).flat(), vec({0, 0, -1}).flat());
}

TEST(CheckDimension, PartitionMustTile) {
  EXPECT_THROW(NormSpec::block_l12(std::vector<Index>{2, 2}).check_dimension(5), Error);
  EXPECT_THROW(norm_value(NormSpec::spectral_max({{2, 2}}), vec({1, 2, 3})), Error);
}
