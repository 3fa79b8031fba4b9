#pragma once

// Small dense matrix primitives for the spectral geometry.

#include <array>
#include <vector>

#include "neos/param.hpp"

namespace neos {

/// How a polar factor U V^T is obtained.
struct PolarMethod {
  enum class Kind { kExactSvd, kNewtonSchulz, kPolarExpress };
  using Triple = std::array<double, 3>;

  Kind kind = Kind::kExactSvd;
  int steps = 5;
  /// Odd quintic coefficients (a, b, c): X <- a X + b (X X^T) X + c (X X^T)^2 X.
  /// Used by kPolarExpress; the last triple repeats once the schedule runs out.
  std::vector<Triple> schedule;

  static PolarMethod exact_svd() { return {}; }
  static PolarMethod newton_schulz(int steps = 5);
  static PolarMethod polar_express(int steps = 5, std::vector<Triple> schedule = {});
};

/// Greedy minimax quintic schedule for singular values in [0.01, 1], followed
/// by the classical quintic (15/8, -5/4, 3/8).
const std::vector<PolarMethod::Triple>& default_polar_express_schedule();

struct Svd {
  Matrix u;
  Vector sigma;  // nonincreasing, nonnegative
  Matrix v;
};

/// Reduced SVD, M = U diag(sigma) V^T. Intended for min(rows, cols) <= 512.
Svd svd_small(const Matrix& m);

double nuclear_norm(const Matrix& m);
double spectral_norm(const Matrix& m);

/// Polar factor U V^T of the reduced SVD. The exact path drops singular
/// directions below 1e-12 * sigma_max; iterative paths pre-scale by 1/||M||_F.
Matrix polar_factor(const Matrix& m, const PolarMethod& method = {});

}  // namespace neos
