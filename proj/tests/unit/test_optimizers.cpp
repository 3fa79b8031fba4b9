#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "neos/optimizers.hpp"

using namespace neos;

namespace {

// L(w) = <c, w>: gradient c everywhere, so hand-computed steps are exact.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(ParamVector c) : c_(std::move(c)) {}
  const LayoutPtr& layout() const override { return c_.layout(); }
  std::string kind() const override { return "linear"; }
  double loss(const ParamVector& w) const override { return inner(c_, w); }
  ParamVector grad(const ParamVector&) const override { return c_; }
  ParamVector hvp(const ParamVector&, const ParamVector& d) const override { return ParamVector::zeros(d.layout()); }

 private:
  ParamVector c_;
};

ParamVector vec(const LayoutPtr& l, std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return ParamVector(l, v);
}

OptimizerSpec spec_of(NormSpec n, double eta, StepMode mode = StepMode::kUnnormalized) {
  OptimizerSpec s;
  s.norm = std::move(n);
  s.eta = eta;
  s.mode = mode;
  return s;
}

}  // namespace

TEST(Step, EuclideanIsPlainGd) {
  RngState rng(1);
  const QuadraticObjective q(fixtures::random_pd(6, 10, rng));
  const auto w = gaussian_like(q.layout(), rng);
  const auto r = step(q, w, spec_of(NormSpec::euclidean(), 0.05));
  EXPECT_LE((r.w.flat() - (w.flat() - 0.05 * q.grad(w).flat())).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(r.record.threshold, 2.0 / 0.05);
}

TEST(Step, LinfUnnormalizedAndSign) {
  const auto l = BlockLayout::flat(2);
  const LinearObjective obj(vec(l, {1, -2}));
  const auto w0 = ParamVector::zeros(l);
  const auto a = step(obj, w0, spec_of(NormSpec::linf(), 0.1));
  EXPECT_NEAR(a.w[0], -0.3, 1e-15);
  EXPECT_NEAR(a.w[1], 0.3, 1e-15);
  const auto b = step(obj, w0, spec_of(NormSpec::linf(), 0.1, StepMode::kNormalized));
  EXPECT_NEAR(b.w[0], -0.1, 1e-15);
  EXPECT_NEAR(b.w[1], 0.1, 1e-15);
  EXPECT_NEAR(b.record.threshold, 2 * 3 / 0.1, 1e-12);
}

TEST(Step, StationaryAndDiverged) {
  const auto l = BlockLayout::flat(2);
  const LinearObjective zero(vec(l, {0, 0}));
  const auto w = vec(l, {1, 2});
  const auto r = step(zero, w, spec_of(NormSpec::linf(), 0.1));
  EXPECT_TRUE(r.record.stationary);
  EXPECT_EQ(r.w.flat(), w.flat());
  const QuadraticObjective q(Matrix::Identity(2, 2));
  const auto bad = step(q, vec(l, {std::nan(""), 0}), spec_of(NormSpec::euclidean(), 0.1));
  EXPECT_TRUE(bad.record.diverged);
  const auto big = step(q, vec(l, {1e7, 0}), spec_of(NormSpec::euclidean(), 10.0));
  EXPECT_TRUE(big.record.diverged);
}

TEST(Step, NormalizedEqualsUnnormalizedWithEffectiveStep) {
  RngState rng(2);
  auto obj = fixtures::small_mlp(30, 4, {6}, 2, 2);
  const auto w = obj->init(rng);
  for (const auto& [name, n] : fixtures::mlp_geometries(*obj->layout())) {
    const auto a = step(*obj, w, spec_of(n, 0.05, StepMode::kNormalized));
    const auto b = step(*obj, w, spec_of(n, 0.05 / a.record.dual_grad_norm));
    EXPECT_LE((a.w.flat() - b.w.flat()).cwiseAbs().maxCoeff(), 1e-12) << name;
  }
}

TEST(Step, DescentIdentityOnMlp) {
  RngState rng(3);
  auto obj = fixtures::small_mlp(30, 4, {6}, 2, 3);
  const auto w = obj->init(rng);
  for (const auto& [name, n] : fixtures::mlp_geometries(*obj->layout())) {
    for (auto mode : {StepMode::kUnnormalized, StepMode::kNormalized}) {
      const auto r = step(*obj, w, spec_of(n, 0.02, mode));
      const double g = r.record.dual_grad_norm, d = *r.record.dir_smoothness, eta = 0.02;
      const double predicted =
          mode == StepMode::kUnnormalized ? -eta * (1 - 0.5 * eta * d) * g * g : -eta * (g - 0.5 * eta * d);
      const double actual = r.record.loss_after - r.record.loss_before;
      EXPECT_NEAR(actual, predicted, 1e-9 * std::max(std::abs(actual), eta * g * (mode == StepMode::kUnnormalized ? g : 1)))
          << name;
    }
  }
}

TEST(BlockCd, SingletonTieAndZero) {
  const auto l = BlockLayout::make({{"a", {2}}, {"b", {1}}});
  const auto w0 = ParamVector::zeros(l);
  const auto single = block_cd_step(LinearObjective(vec(l, {3, 4, 2})), w0, *l, 0.1);
  EXPECT_LT((single.w.flat() - vec(l, {-0.3, -0.4, 0}).flat()).norm(), 1e-15);
  const auto tie = block_cd_step(LinearObjective(vec(l, {3, 4, 5})), w0, *l, 0.1);
  EXPECT_LT((tie.w.flat() - vec(l, {-0.15, -0.2, -0.25}).flat()).norm(), 1e-15);
  const auto zero = block_cd_step(LinearObjective(vec(l, {0, 0, 0})), w0, *l, 0.1);
  EXPECT_TRUE(zero.record.stationary);
  EXPECT_TRUE(zero.w.is_zero());
  // The generic path resolves the same tie with the lowest-index rule.
  const auto generic = step(LinearObjective(vec(l, {3, 4, 5})), w0, spec_of(NormSpec::block_l12(*l), 0.1));
  EXPECT_LT((generic.w.flat() - vec(l, {-0.3, -0.4, 0}).flat()).norm(), 1e-15);
}

TEST(BlockCd, MatchesGenericWithoutTies) {
  RngState rng(4);
  auto obj = fixtures::small_mlp(30, 4, {6}, 2, 4);
  const auto w = obj->init(rng);
  const auto a = block_cd_step(*obj, w, *obj->layout(), 0.05);
  const auto b = step(*obj, w, spec_of(NormSpec::block_l12(*obj->layout()), 0.05));
  EXPECT_LE((a.w.flat() - b.w.flat()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Spectral, HandValues) {
  const auto l1 = BlockLayout::flat(1);
  const auto a = spectral_step(LinearObjective(vec(l1, {-2})), ParamVector::zeros(l1), {{1, 1}}, 0.1, {});
  EXPECT_NEAR(a.w[0], 0.2, 1e-15);
  const auto l = BlockLayout::make({{"W", {2, 2}}, {"b", {1}}});
  const auto b = spectral_step(LinearObjective(vec(l, {2, 0, 0, -1, 3})), ParamVector::zeros(l), {{2, 2}, {1, 1}},
                               0.1, {});
  EXPECT_NEAR(b.record.dual_grad_norm, 6.0, 1e-14);
  const Vector expected = vec(l, {-0.6, 0, 0, 0.6, -0.6}).flat();
  EXPECT_LE((b.w.flat() - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Spectral, MatchesGenericSpectralMax) {
  RngState rng(5);
  auto obj = fixtures::small_mlp(30, 4, {6}, 2, 5);
  const auto w = obj->init(rng);
  const auto shapes = matrix_shapes(*obj->layout());
  const auto a = spectral_step(*obj, w, shapes, 0.05, {});
  const auto b = step(*obj, w, spec_of(NormSpec::spectral_max(*obj->layout()), 0.05));
  EXPECT_LE((a.w.flat() - b.w.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rmsprop, SignLimit) {
  const auto l = BlockLayout::flat(4);
  const LinearObjective obj(vec(l, {1e-3, -0.5, 2.0, -7.0}));
  RmspropState state;
  const auto r = rmsprop_step(obj, ParamVector::zeros(l), state, 0.0, 1e-12, 0.1);
  const Vector expected = -0.1 * Vector4(1, -1, 1, -1);
  EXPECT_LE((r.w.flat() - expected).cwiseAbs().maxCoeff(), 1e-8 * 0.1);
  ASSERT_TRUE(r.record.preconditioner.has_value());
}

TEST(Rmsprop, ConstantGradientSteadyState) {
  const auto l = BlockLayout::flat(3);
  const Vector g = Vector3(0.5, -2.0, 1e-2);
  const LinearObjective obj(ParamVector(l, g));
  RmspropState state;
  ParamVector w = ParamVector::zeros(l);
  StepResult r;
  for (int t = 0; t < 500; ++t) {
    r = rmsprop_step(obj, w, state, 0.99, 1e-8, 0.01);
    w = r.w;
  }
  EXPECT_LE(((state.nu - g.cwiseAbs2()).array().abs() / g.cwiseAbs2().array()).maxCoeff(), 0.01);
  const Vector expected = -0.01 * g.cwiseQuotient((g.cwiseAbs().array() + 1e-8).matrix());
  EXPECT_LE((r.record.update.flat() - expected).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Rmsprop, ZeroGradientDecaysState) {
  const auto l = BlockLayout::flat(2);
  const LinearObjective obj(vec(l, {0, 0}));
  RmspropState state{Vector2(4, 1)};
  const auto w = vec(l, {1, 1});
  const auto r = rmsprop_step(obj, w, state, 0.9, 1e-8, 0.1);
  EXPECT_EQ(r.w.flat(), w.flat());
  EXPECT_NEAR(state.nu[0], 3.6, 1e-15);
  EXPECT_NEAR(state.nu[1], 0.9, 1e-15);
}

TEST(Run, QuadraticConvergesAndIsDeterministic) {
  RngState rng(6);
  const Matrix h = fixtures::random_pd(5, 8, rng);
  const QuadraticObjective q(h);
  const auto w0 = gaussian_like(q.layout(), rng);
  RunOptions opt;
  opt.steps = 50;
  opt.cadence = 10;
  const auto spec = spec_of(NormSpec::euclidean(), 1.0 / 8.0);
  const auto a = run(q, w0, spec, opt), b = run(q, w0, spec, opt);
  EXPECT_LE(q.loss(a.final_w), q.loss(w0));
  ASSERT_EQ(a.records.size(), 50u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].loss_after, b.records[i].loss_after);
    EXPECT_EQ(a.records[i].sharpness.has_value(), i % 10 == 0);
  }
  EXPECT_NEAR(*a.records[0].sharpness, 8.0, 1e-8);
  opt.steps = 0;
  EXPECT_THROW(run(q, w0, spec, opt), Error);
}

TEST(Run, StopsOnDivergenceAndKeepsTrace) {
  const QuadraticObjective q(Matrix::Identity(2, 2));
  RunOptions opt;
  opt.steps = 1000;
  opt.cadence = 0;
  int streamed = 0;
  opt.on_record = [&](const StepRecord&) { ++streamed; };
  const auto r = run(q, ParamVector(q.layout(), Vector2(1, 1)), spec_of(NormSpec::euclidean(), 5.0), opt);
  EXPECT_TRUE(r.diverged);
  EXPECT_LT(r.records.size(), 1000u);
  EXPECT_EQ(streamed, static_cast<int>(r.records.size()));
  EXPECT_TRUE(r.records.back().diverged);
}

TEST(Spec, Validation) {
  OptimizerSpec s;
  s.eta = 0;
  EXPECT_THROW(s.validate(), Error);
  s.eta = 0.1;
  s.stepper = StepperKind::kRmsprop;
  EXPECT_THROW(s.validate(), Error);
  s.rmsprop = RmspropSchedule{0.99, 1e-8};
  EXPECT_NO_THROW(s.validate());
  s.stepper = StepperKind::kBlockCd;
  EXPECT_THROW(s.validate(), Error);
}
