#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "neos/data_io.hpp"
#include "neos/objectives.hpp"
#include "neos/optimizers.hpp"

using namespace neos;

namespace {

std::vector<CifarRecord> synthetic_records(int count, std::uint64_t seed) {
  RngState rng(seed);
  std::vector<CifarRecord> recs(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    recs[k].label = static_cast<std::uint8_t>(k % 10);
    recs[k].pixels.resize(kCifarImageBytes);
    for (auto& px : recs[k].pixels) px = static_cast<std::uint8_t>(rng.below(256));
  }
  return recs;
}

}  // namespace

TEST(Cifar, RecordArithmeticAndPositions) {
  const auto dir = fixtures::scratch_dir("cifar_pos");
  const auto recs = synthetic_records(37, 1);
  write_cifar_batch(dir / "data_batch_1.bin", recs);
  EXPECT_EQ(std::filesystem::file_size(dir / "data_batch_1.bin"), 37 * kCifarRecordBytes);
  const auto back = read_cifar_batch(dir / "data_batch_1.bin");
  ASSERT_EQ(back.size(), 37u);
  // Byte-level check of the (c, y, x) addressing against the raw file.
  std::ifstream in(dir / "data_batch_1.bin", std::ios::binary);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), {});
  for (int k : {0, 5, 36}) {
    EXPECT_EQ(static_cast<std::uint8_t>(raw[kCifarRecordBytes * k]), back[k].label);
    for (int c : {0, 1, 2})
      for (int y : {0, 17, 31})
        for (int x : {0, 9, 31})
          EXPECT_EQ(static_cast<std::uint8_t>(raw[kCifarRecordBytes * k + 1 + 1024 * c + 32 * y + x]),
                    back[k].pixels[1024 * c + 32 * y + x]);
  }
}

TEST(Cifar, FormatErrors) {
  const auto dir = fixtures::scratch_dir("cifar_err");
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << std::string(3000, '\0');
  }
  try {
    read_cifar_batch(dir / "bad.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
  auto recs = synthetic_records(3, 2);
  recs[1].label = 10;
  write_cifar_batch(dir / "label.bin", recs);
  EXPECT_THROW(read_cifar_batch(dir / "label.bin"), Error);
}

TEST(Cifar, SubsetIsBalancedStandardizedAndDeterministic) {
  const auto dir = fixtures::scratch_dir("cifar_subset");
  write_cifar_batch(dir / "data_batch_1.bin", synthetic_records(400, 3));
  write_cifar_batch(dir / "data_batch_2.bin", synthetic_records(400, 4));
  const Dataset a = load_cifar10_subset(dir, 20, 9);
  const Dataset b = load_cifar10_subset(dir, 20, 9);
  EXPECT_EQ(a.size(), 200);
  EXPECT_EQ(a.output_dim(), 10);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.targets, b.targets);
  const Vector per_class = a.targets.colwise().sum();
  for (Index c = 0; c < 10; ++c) EXPECT_EQ(per_class[c], 20.0);
  for (int c = 0; c < 3; ++c) {
    const auto plane = a.inputs.middleCols(1024 * c, 1024);
    const double mean = plane.mean();
    const double var = (plane.array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-10);
  }
  const Dataset other = load_cifar10_subset(dir, 20, 10);
  EXPECT_NE(a.inputs, other.inputs);
  EXPECT_THROW(load_cifar10_subset(dir, 81, 9), Error);  // only 80 per class available
}

TEST(Synthetic, ShapesAndDeterminism) {
  for (auto kind : {SyntheticKind::kTeacherMlp, SyntheticKind::kRandomRegression, SyntheticKind::kTwoGaussians}) {
    SyntheticOptions o;
    o.kind = kind;
    o.n = 50;
    o.p = 5;
    o.q = kind == SyntheticKind::kTwoGaussians ? 2 : 3;
    o.seed = 4;
    const Dataset a = gen_synthetic(o), b = gen_synthetic(o);
    EXPECT_EQ(a.inputs, b.inputs);
    EXPECT_EQ(a.targets, b.targets);
    EXPECT_EQ(a.size(), 50);
    EXPECT_NO_THROW(validate_dataset(a));
  }
}

TEST(Synthetic, SingleExampleIsValid) {
  SyntheticOptions o;
  o.n = 1;
  o.p = 3;
  o.q = 2;
  const Dataset d = gen_synthetic(o);
  const MlpObjective obj({3, 4, 2}, Activation::kTanh, d);
  RngState rng(1);
  EXPECT_TRUE(std::isfinite(obj.loss(obj.init(rng))));
}

TEST(Synthetic, NoiselessRegressionIsFitByLinearGd) {
  SyntheticOptions o;
  o.kind = SyntheticKind::kRandomRegression;
  o.n = 200;
  o.p = 6;
  o.q = 2;
  o.seed = 5;
  const Dataset d = gen_synthetic(o);
  // A linear model is a zero-hidden-layer MLP.
  const MlpObjective obj({6, 2}, Activation::kTanh, d);
  ParamVector w = ParamVector::zeros(obj.layout());
  const Matrix x = d.inputs;
  const Eigen::SelfAdjointEigenSolver<Matrix> es((x.transpose() * x) / static_cast<double>(d.size()));
  OptimizerSpec spec;
  spec.eta = 1.0 / (es.eigenvalues().maxCoeff() + 1.0);
  RunOptions opt;
  opt.steps = 5000;
  opt.cadence = 0;
  const RunResult r = run(obj, w, spec, opt);
  EXPECT_LE(obj.loss(r.final_w), 1e-10);
}

TEST(Synthetic, TwoGaussiansAreSeparableByASmallMlp) {
  SyntheticOptions o;
  o.kind = SyntheticKind::kTwoGaussians;
  o.n = 200;
  o.p = 4;
  o.q = 2;
  o.seed = 6;
  const Dataset d = gen_synthetic(o);
  const MlpObjective obj({4, 16, 2}, Activation::kTanh, d);
  RngState rng(2);
  OptimizerSpec spec;
  spec.eta = 0.05;
  RunOptions opt;
  opt.steps = 400;
  opt.cadence = 0;
  const RunResult r = run(obj, obj.init(rng), spec, opt);
  const Matrix pred = obj.predict(r.final_w);
  int wrong = 0;
  for (Index i = 0; i < d.size(); ++i) {
    Index a = 0, b = 0;
    pred.row(i).maxCoeff(&a);
    d.targets.row(i).maxCoeff(&b);
    wrong += a != b;
  }
  EXPECT_LE(wrong, 2);
}

TEST(Serialize, MatrixAndDatasetRoundTrip) {
  const auto dir = fixtures::scratch_dir("dataset");
  RngState rng(8);
  const Matrix m = gaussian_matrix(3, 5, rng);
  save_matrix(dir / "m.bin", m);
  EXPECT_EQ(load_matrix(dir / "m.bin"), m);
  SyntheticOptions o;
  o.kind = SyntheticKind::kTwoGaussians;
  o.n = 10;
  o.q = 2;
  const Dataset d = gen_synthetic(o);
  save_dataset(dir / "d.bin", d);
  const Dataset e = load_dataset(dir / "d.bin");
  EXPECT_EQ(e.inputs, d.inputs);
  EXPECT_EQ(e.targets, d.targets);
  EXPECT_EQ(e.classification, d.classification);
}
