#pragma once

// Shared builders for unit and acceptance tests.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <memory>

#include "neos/data_io.hpp"
#include "neos/norms.hpp"
#include "neos/objectives.hpp"

namespace neos::fixtures {

/// Random symmetric PD matrix with eigenvalues spread log-uniformly in [1, cond].
inline Matrix random_pd(Index d, double cond, RngState& rng) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  const Matrix q = qr.householderQ();
  Vector eig(d);
  for (Index i = 0; i < d; ++i) eig[i] = std::pow(cond, rng.uniform());
  eig[0] = 1.0;
  eig[d - 1] = cond;
  return q * eig.asDiagonal() * q.transpose();
}

inline Matrix random_symmetric(Index d, RngState& rng) {
  const Matrix a = gaussian_matrix(d, d, rng);
  Matrix h = a;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < i; ++j) h(i, j) = h(j, i);
  return h;
}

struct NamedNorm {
  std::string name;
  NormSpec norm;
};

/// The six geometries on R^8 used by the quadratic suites: 2x2 matrix blocks
/// for the spectral variants, partition (3, 3, 2) for block l_{1,2}.
inline std::vector<NamedNorm> quadratic_geometries() {
  Vector diag(8);
  diag << 1.0, 2.0, 0.5, 1.5, 3.0, 1.0, 0.75, 2.5;
  return {{"l2", NormSpec::euclidean()},
          {"preconditioned", NormSpec::preconditioned_diagonal(diag)},
          {"linf", NormSpec::linf()},
          {"block_l12", NormSpec::block_l12(std::vector<Index>{3, 3, 2})},
          {"spectral_max", NormSpec::spectral_max({{2, 2}, {2, 2}})},
          {"spectral_sum", NormSpec::spectral_sum({{2, 2}, {2, 2}})}};
}

/// Tanh MLP p -> hidden... -> q on a seeded teacher dataset.
inline std::shared_ptr<const MlpObjective> small_mlp(Index n, Index p, std::vector<Index> hidden, Index q,
                                                     std::uint64_t seed, Activation act = Activation::kTanh) {
  SyntheticOptions o;
  o.kind = SyntheticKind::kTeacherMlp;
  o.n = n;
  o.p = p;
  o.q = q;
  o.seed = seed;
  std::vector<Index> widths{p};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(q);
  return std::make_shared<const MlpObjective>(widths, act, gen_synthetic(o));
}

/// Geometries over an MLP layout.
inline std::vector<NamedNorm> mlp_geometries(const BlockLayout& layout) {
  Vector diag = Vector::LinSpaced(layout.total_dim(), 0.5, 2.0);
  return {{"l2", NormSpec::euclidean()},
          {"preconditioned", NormSpec::preconditioned_diagonal(diag)},
          {"linf", NormSpec::linf()},
          {"block_l12", NormSpec::block_l12(layout)},
          {"spectral_max", NormSpec::spectral_max(layout)},
          {"spectral_sum", NormSpec::spectral_sum(layout)}};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("neos_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace neos::fixtures
