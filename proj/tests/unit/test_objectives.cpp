#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "neos/objectives.hpp"

using namespace neos;

TEST(Quadratic, LossGradHvp) {
  const QuadraticObjective q(Vector2(2, 4).asDiagonal().toDenseMatrix());
  const ParamVector w(q.layout(), Vector2(1, 1));
  EXPECT_EQ(q.loss(w), 3.0);
  EXPECT_EQ(q.grad(w).flat(), Vector2(2, 4));
  Matrix h(2, 2);
  h << 2, 1, 1, 2;
  const QuadraticObjective q2(h);
  EXPECT_EQ(q2.hvp(w, ParamVector(q2.layout(), Vector2(1, 0))).flat(), Vector2(2, 1));
  EXPECT_TRUE(q2.hvp(w, ParamVector::zeros(q2.layout())).is_zero());
}

TEST(Quadratic, SymmetrizesAndSatisfiesExactExpansion) {
  RngState rng(3);
  const Matrix a = gaussian_matrix(6, 6, rng);
  const QuadraticObjective q(a);
  EXPECT_LE((q.hessian() - q.hessian().transpose()).cwiseAbs().maxCoeff(), 1e-12);
  const auto w = gaussian_like(q.layout(), rng), y = gaussian_like(q.layout(), rng);
  const auto c = y - w;
  const double lhs = q.loss(y) - q.loss(w) - inner(q.grad(w), c);
  EXPECT_NEAR(lhs, 0.5 * c.flat().dot(q.hessian() * c.flat()), 1e-12 * (1 + std::abs(lhs)));
}

TEST(Quadratic, NonFiniteIsADivergenceSignal) {
  const QuadraticObjective q(Matrix::Identity(2, 2));
  const ParamVector w(q.layout(), Vector2(std::nan(""), 1));
  EXPECT_TRUE(std::isinf(q.loss(w)));
  EXPECT_FALSE(q.grad(w).all_finite());
}

TEST(Mlp, ZeroWeights) {
  auto mlp = fixtures::small_mlp(10, 3, {4}, 2, 1);
  Dataset d = mlp->data();
  d.targets.setZero();
  const MlpObjective obj({3, 4, 2}, Activation::kTanh, d);
  EXPECT_EQ(obj.loss(ParamVector::zeros(obj.layout())), 0.0);
  // Bias-only output: last-layer bias b gives (1/2)||b||^2.
  Vector w = Vector::Zero(obj.layout()->total_dim());
  const auto& b = obj.layout()->block(3);
  w.segment(b.offset, 2) = Vector2(1, 2);
  EXPECT_NEAR(obj.loss(ParamVector(obj.layout(), w)), 2.5, 1e-15);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  for (auto act : {Activation::kTanh, Activation::kRelu}) {
    auto obj = fixtures::small_mlp(30, 5, {8, 6}, 3, 2, act);
    RngState rng(4);
    const auto w = obj->init(rng);
    if (act == Activation::kRelu && obj->min_abs_preactivation(w) < 1e-4) continue;
    const auto g = obj->grad(w);
    for (int k = 0; k < 20; ++k) {
      const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(w.size())));
      Vector e = Vector::Zero(w.size());
      e[i] = 1e-5;
      const double fd = (obj->loss(w.with(w.flat() + e)) - obj->loss(w.with(w.flat() - e))) / 2e-5;
      EXPECT_NEAR(fd, g[i], 1e-6 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST(Mlp, HvpMatchesCentralDifferenceOfGradients) {
  auto obj = fixtures::small_mlp(40, 5, {8, 8}, 3, 3);
  RngState rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = obj->init(rng);
    const auto d = gaussian_like(obj->layout(), rng);
    const double eps = 1e-5 * w.flat().norm() / d.flat().norm();
    const Vector fd = (obj->grad(axpy(eps, d, w)).flat() - obj->grad(axpy(-eps, d, w)).flat()) / (2 * eps);
    const Vector hv = obj->hvp(w, d).flat();
    EXPECT_LE((fd - hv).norm() / hv.norm(), 1e-4);
  }
}

TEST(Mlp, HvpSymmetricAndLinear) {
  auto obj = fixtures::small_mlp(40, 5, {8}, 2, 6);
  RngState rng(6);
  const auto w = obj->init(rng);
  const auto a = gaussian_like(obj->layout(), rng), b = gaussian_like(obj->layout(), rng);
  const double ab = inner(obj->hvp(w, a), b), ba = inner(obj->hvp(w, b), a);
  EXPECT_NEAR(ab, ba, 1e-8 * std::abs(ab));
  const Vector lhs = obj->hvp(w, axpy(-0.3, b, scale(2.0, a))).flat();
  const Vector rhs = 2.0 * obj->hvp(w, a).flat() - 0.3 * obj->hvp(w, b).flat();
  EXPECT_LE((lhs - rhs).norm(), 1e-10 * (1 + rhs.norm()));
  EXPECT_TRUE(obj->hvp(w, ParamVector::zeros(obj->layout())).is_zero());
}

TEST(Mlp, LayoutNamesFollowLayers) {
  auto obj = fixtures::small_mlp(5, 3, {4}, 2, 1);
  EXPECT_EQ(obj->layout()->block(0).name, "layer0.weight");
  EXPECT_EQ(obj->layout()->block(0).rows, 4);
  EXPECT_EQ(obj->layout()->block(0).cols, 3);
  EXPECT_EQ(obj->layout()->block(3).name, "layer1.bias");
}

TEST(Taylor, ExactAtAnchor) {
  auto obj = fixtures::small_mlp(20, 4, {6}, 2, 7);
  RngState rng(7);
  const auto a = obj->init(rng);
  const auto t = make_taylor(obj, a);
  const auto [l, g] = obj->loss_and_grad(a);
  EXPECT_EQ(t->loss(a), l);
  EXPECT_EQ(t->grad(a).flat(), g.flat());
}

TEST(Taylor, QuadraticIsItsOwnModel) {
  RngState rng(8);
  auto q = std::make_shared<const QuadraticObjective>(fixtures::random_pd(6, 10, rng));
  const auto t = make_taylor(q, gaussian_like(q->layout(), rng));
  for (int i = 0; i < 10; ++i) {
    const auto w = gaussian_like(q->layout(), rng);
    EXPECT_NEAR(t->loss(w), q->loss(w), 1e-10 * (1 + q->loss(w)));
  }
}

TEST(Taylor, ThirdOrderResidual) {
  auto obj = fixtures::small_mlp(30, 4, {6}, 2, 9);
  RngState rng(9);
  const auto a = obj->init(rng);
  const auto t = make_taylor(obj, a);
  const auto d = gaussian_like(obj->layout(), rng);
  auto residual = [&](double h) {
    const auto w = axpy(h, d, a);
    return std::abs(obj->loss(w) - t->loss(w));
  };
  // Halving the step shrinks an O(h^3) residual by ~8.
  const double ratio = residual(1e-2) / residual(5e-3);
  EXPECT_GT(ratio, 6.0);
  EXPECT_LT(ratio, 10.0);
}

TEST(Taylor, HessianIsFrozen) {
  auto obj = fixtures::small_mlp(30, 4, {6}, 2, 10);
  RngState rng(10);
  const auto a = obj->init(rng);
  const auto t = make_taylor(obj, a);
  const auto d = gaussian_like(obj->layout(), rng);
  const auto w2 = axpy(0.3, gaussian_like(obj->layout(), rng), a);
  EXPECT_NEAR(inner(d, t->hvp(a, d)), inner(d, t->hvp(w2, d)), 1e-12 * std::abs(inner(d, t->hvp(a, d))));
}

TEST(DenseHessian, MatchesQuadratic) {
  RngState rng(11);
  const Matrix h = fixtures::random_pd(5, 4, rng);
  const auto l = BlockLayout::flat(5);
  EXPECT_LT((dense_hessian(matrix_hvp(h, l), l) - h).norm(), 1e-12);
}
