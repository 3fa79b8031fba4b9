#pragma once

// Norm geometries: primal norm, dual norm, dual vector (linear maximizer over
// the unit ball), linear minimization oracle and sphere projection.

#include <memory>
#include <string>
#include <vector>

#include "neos/matrixfns.hpp"
#include "neos/param.hpp"

namespace neos {

/// Contiguous slice of the flat vector, viewed as a rows x cols row-major
/// matrix (rows = size, cols = 1 for vector blocks).
struct BlockRange {
  Index offset = 0;
  Index rows = 0;
  Index cols = 1;
  Index size() const { return rows * cols; }
};

class NormSpec {
 public:
  enum class Kind { kEuclidean, kPreconditioned, kLinf, kBlockL12, kSpectralMax, kSpectralSum };

  NormSpec() : NormSpec(Kind::kEuclidean) {}

  static NormSpec euclidean() { return NormSpec(Kind::kEuclidean); }
  static NormSpec linf() { return NormSpec(Kind::kLinf); }
  /// Dense SPD preconditioner; checked for symmetry (1e-12) and positive spectrum.
  static NormSpec preconditioned(const Matrix& p);
  /// Diagonal preconditioner with strictly positive entries.
  static NormSpec preconditioned_diagonal(const Vector& diag);
  /// ||w||_{1,2} = sum of block l2 norms over contiguous blocks of the given sizes.
  static NormSpec block_l12(const std::vector<Index>& block_sizes);
  static NormSpec block_l12(const BlockLayout& layout);
  /// max over blocks of the spectral norm; shapes are (rows, cols), tiled in order.
  static NormSpec spectral_max(const std::vector<std::pair<Index, Index>>& shapes, PolarMethod polar = {});
  static NormSpec spectral_max(const BlockLayout& layout, PolarMethod polar = {});
  /// sum over blocks of the spectral norm (dual: max nuclear norm).
  static NormSpec spectral_sum(const std::vector<std::pair<Index, Index>>& shapes, PolarMethod polar = {});
  static NormSpec spectral_sum(const BlockLayout& layout, PolarMethod polar = {});

  Kind kind() const noexcept { return kind_; }
  std::string name() const;

  const std::vector<BlockRange>& blocks() const noexcept { return blocks_; }
  const PolarMethod& polar() const noexcept { return polar_; }
  bool has_dense_preconditioner() const noexcept { return static_cast<bool>(dense_); }
  /// Dense P (materialized from the diagonal if needed).
  Matrix preconditioner_matrix(Index dim) const;
  const Vector& preconditioner_diagonal() const;

  /// P^{-1} g for the preconditioned geometry.
  Vector solve(const Vector& g) const;
  /// P v.
  Vector apply(const Vector& v) const;
  /// With P = L L^T (Cholesky, or sqrt of the diagonal): L^{-1} v and L^{-T} v.
  /// The map v -> L^{-T} v sends the l2 unit sphere onto the P unit sphere.
  Vector inv_sqrt(const Vector& v) const;
  Vector inv_sqrt_transpose(const Vector& v) const;

  /// Same geometry with a different polar method (spectral variants only).
  NormSpec with_polar(PolarMethod polar) const;

  /// Throws kLayoutMismatch when the geometry cannot act on vectors of this dimension.
  void check_dimension(Index dim) const;

 private:
  explicit NormSpec(Kind kind) : kind_(kind) {}

  struct Dense;

  Kind kind_;
  std::vector<BlockRange> blocks_;
  PolarMethod polar_;
  std::shared_ptr<const Dense> dense_;
  std::shared_ptr<const Vector> diag_;
};

double norm_value(const NormSpec& spec, const ParamVector& v);
double dual_norm(const NormSpec& spec, const ParamVector& g);
/// Unit-norm maximizer of <g, y>. Ties: l_inf zero coordinates map to 0;
/// block variants concentrate on the lowest-index block within 1e-12 of the max.
ParamVector dual_vector(const NormSpec& spec, const ParamVector& g);
/// argmin of <g, y> over the unit ball, i.e. -dual_vector(g); zero for g = 0.
ParamVector lmo(const NormSpec& spec, const ParamVector& g);
/// Map a nonzero vector onto the unit sphere: radial scaling, except sign(.)
/// for l_inf and per-block polar factors for the spectral max norm.
ParamVector project_sphere(const NormSpec& spec, const ParamVector& v);

}  // namespace neos
