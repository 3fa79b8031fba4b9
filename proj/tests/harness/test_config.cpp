#include <gtest/gtest.h>

#include "neos/harness/config.hpp"

using namespace neos;
using namespace neos::harness;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;  // sentinel: nothing thrown
}

std::string message_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  ExperimentConfig a;
  a.objective.quadratic.diag = {1.0};
  EXPECT_EQ(parse_config(serialize_config(a)), a);
}

TEST(Config, FullRoundTrip) {
  ExperimentConfig a;
  a.name = "round trip";
  a.seed = 42;
  a.threads = 3;
  a.objective.kind = "mlp";
  a.objective.hidden = {8, 5};
  a.objective.dataset.generator = "random_regression";
  a.objective.dataset.noise = 0.1;
  a.optimizer.mode = "normalized";
  a.optimizer.stepper = "spectral";
  a.optimizer.norm.kind = "spectral_max";
  a.optimizer.norm.polar = {"polar_express", 7, {{3.0, -4.0, 1.5}}};
  a.optimizer.eta = 1.0 / 3.0;
  a.measurement.switch_steps = {10, 200};
  a.quad.eta_over_s = {0.5, 1.9, 2.1};
  a.oracle_check.restarts = {1, 50};
  a.output.formats = {"csv"};
  const ExperimentConfig b = parse_config(serialize_config(a));
  EXPECT_EQ(b, a);
  EXPECT_EQ(serialize_config(b), serialize_config(a));
}

TEST(Config, ShortestDoubles) {
  ExperimentConfig a;
  a.objective.quadratic.diag = {1.0};
  a.optimizer.eta = 0.1;
  EXPECT_NE(serialize_config(a).find("eta: 0.1\n"), std::string::npos);
}

TEST(Config, UnknownKeyNamesPathAndLine) {
  const std::string text = "name: x\noptimizer:\n  eta: 0.1\n  etta: 0.2\n";
  EXPECT_EQ(code_of(text), ErrorCode::kConfig);
  const std::string msg = message_of(text);
  EXPECT_NE(msg.find("optimizer.etta"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(Config, RejectsBadValues) {
  EXPECT_EQ(code_of("optimizer:\n  eta: -1\n"), ErrorCode::kConfig);
  EXPECT_EQ(code_of("optimizer:\n  norm:\n    kind: l3\n"), ErrorCode::kConfig);
  EXPECT_EQ(code_of("optimizer:\n  steps: many\n"), ErrorCode::kConfig);
  EXPECT_EQ(code_of("objective:\n  kind: quadratic\n"), ErrorCode::kConfig);  // no H given
  EXPECT_EQ(code_of("objective:\n  quadratic:\n    diag: [1, 2]\n    random_dim: 3\n"), ErrorCode::kConfig);
  EXPECT_EQ(code_of("version: 2\n"), ErrorCode::kConfig);
}

TEST(Config, BuildsQuadraticAndNorms) {
  const ExperimentConfig cfg = parse_config(
      "objective:\n  kind: quadratic\n  quadratic:\n    diag: [3, 1]\n"
      "optimizer:\n  norm:\n    kind: block_l12\n    blocks: [1, 1]\n");
  validate_config(cfg);
  const Matrix h = build_quadratic_matrix(cfg);
  EXPECT_EQ(h(0, 0), 3.0);
  EXPECT_EQ(h(1, 1), 1.0);
  const ObjectivePtr obj = build_objective(cfg);
  const OptimizerSpec spec = build_optimizer(cfg, *obj->layout());
  EXPECT_EQ(spec.norm.kind(), NormSpec::Kind::kBlockL12);
  EXPECT_EQ(spec.norm.blocks().size(), 2u);
}

TEST(Config, MismatchedBlocksAreConfigErrors) {
  const ExperimentConfig cfg = parse_config(
      "objective:\n  kind: quadratic\n  quadratic:\n    diag: [3, 1]\n"
      "optimizer:\n  norm:\n    kind: block_l12\n    blocks: [3]\n");
  const ObjectivePtr obj = build_objective(cfg);
  try {
    build_optimizer(cfg, *obj->layout());
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}
