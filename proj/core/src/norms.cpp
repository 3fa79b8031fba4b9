#include "neos/norms.hpp"

#include <cmath>

namespace neos {

namespace {

constexpr double kTieTolerance = 1e-12;

using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

std::vector<BlockRange> tile_shapes(const std::vector<std::pair<Index, Index>>& shapes) {
  if (shapes.empty()) throw Error(ErrorCode::kInvalidArgument, "block norm needs at least one block");
  std::vector<BlockRange> out;
  Index offset = 0;
  for (auto [r, c] : shapes) {
    if (r <= 0 || c <= 0) throw Error(ErrorCode::kInvalidArgument, "block extents must be positive");
    out.push_back({offset, r, c});
    offset += r * c;
  }
  return out;
}

Matrix block_matrix(const Vector& v, const BlockRange& b) {
  return ConstMatMap(v.data() + b.offset, b.rows, b.cols);
}

// Lowest index whose score is within the relative tie tolerance of the max.
std::size_t argmax_lowest(const std::vector<double>& scores) {
  double best = scores.front();
  for (double s : scores) best = std::max(best, s);
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= best - kTieTolerance * best) return i;
  return 0;
}

}  // namespace

struct NormSpec::Dense {
  Matrix p;
  Eigen::LLT<Matrix> llt;
};

NormSpec NormSpec::preconditioned(const Matrix& p) {
  if (p.rows() != p.cols() || p.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "preconditioner must be square");
  if (!p.allFinite()) throw Error(ErrorCode::kNonFinite, "preconditioner");
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::kInvalidArgument, "preconditioner is not symmetric");
  const Matrix sym = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorCode::kInvalidArgument, "preconditioner is not positive definite");
  NormSpec spec(Kind::kPreconditioned);
  auto dense = std::make_shared<Dense>();
  dense->p = sym;
  dense->llt.compute(sym);
  spec.dense_ = std::move(dense);
  return spec;
}

NormSpec NormSpec::preconditioned_diagonal(const Vector& diag) {
  if (diag.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty preconditioner");
  if (!diag.allFinite() || (diag.array() <= 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "diagonal preconditioner entries must be positive and finite");
  NormSpec spec(Kind::kPreconditioned);
  spec.diag_ = std::make_shared<const Vector>(diag);
  return spec;
}

NormSpec NormSpec::block_l12(const std::vector<Index>& block_sizes) {
  std::vector<std::pair<Index, Index>> shapes;
  for (Index s : block_sizes) shapes.emplace_back(s, 1);
  NormSpec spec(Kind::kBlockL12);
  spec.blocks_ = tile_shapes(shapes);
  return spec;
}

NormSpec NormSpec::block_l12(const BlockLayout& layout) {
  std::vector<Index> sizes;
  for (const auto& b : layout.blocks()) sizes.push_back(b.size);
  return block_l12(sizes);
}

NormSpec NormSpec::spectral_max(const std::vector<std::pair<Index, Index>>& shapes, PolarMethod polar) {
  NormSpec spec(Kind::kSpectralMax);
  spec.blocks_ = tile_shapes(shapes);
  spec.polar_ = std::move(polar);
  return spec;
}

NormSpec NormSpec::spectral_max(const BlockLayout& layout, PolarMethod polar) {
  return spectral_max(matrix_shapes(layout), std::move(polar));
}

NormSpec NormSpec::spectral_sum(const std::vector<std::pair<Index, Index>>& shapes, PolarMethod polar) {
  NormSpec spec(Kind::kSpectralSum);
  spec.blocks_ = tile_shapes(shapes);
  spec.polar_ = std::move(polar);
  return spec;
}

NormSpec NormSpec::spectral_sum(const BlockLayout& layout, PolarMethod polar) {
  return spectral_sum(matrix_shapes(layout), std::move(polar));
}

std::string NormSpec::name() const {
  switch (kind_) {
    case Kind::kEuclidean: return "euclidean";
    case Kind::kPreconditioned: return "preconditioned";
    case Kind::kLinf: return "linf";
    case Kind::kBlockL12: return "block_l12";
    case Kind::kSpectralMax: return "spectral_max";
    case Kind::kSpectralSum: return "spectral_sum";
  }
  return "unknown";
}

Matrix NormSpec::preconditioner_matrix(Index dim) const {
  if (kind_ != Kind::kPreconditioned) return Matrix::Identity(dim, dim);
  if (dense_) return dense_->p;
  return diag_->asDiagonal();
}

const Vector& NormSpec::preconditioner_diagonal() const {
  if (!diag_) throw Error(ErrorCode::kUnsupported, "geometry has no diagonal preconditioner");
  return *diag_;
}

Vector NormSpec::solve(const Vector& g) const {
  if (kind_ != Kind::kPreconditioned) return g;
  if (dense_) return dense_->llt.solve(g);
  return g.cwiseQuotient(*diag_);
}

Vector NormSpec::apply(const Vector& v) const {
  if (kind_ != Kind::kPreconditioned) return v;
  if (dense_) return dense_->p * v;
  return v.cwiseProduct(*diag_);
}

Vector NormSpec::inv_sqrt(const Vector& v) const {
  if (kind_ != Kind::kPreconditioned) return v;
  if (dense_) return dense_->llt.matrixL().solve(v);
  return v.cwiseQuotient(diag_->cwiseSqrt());
}

Vector NormSpec::inv_sqrt_transpose(const Vector& v) const {
  if (kind_ != Kind::kPreconditioned) return v;
  if (dense_) return dense_->llt.matrixU().solve(v);
  return v.cwiseQuotient(diag_->cwiseSqrt());
}

NormSpec NormSpec::with_polar(PolarMethod polar) const {
  NormSpec copy = *this;
  copy.polar_ = std::move(polar);
  return copy;
}

void NormSpec::check_dimension(Index dim) const {
  switch (kind_) {
    case Kind::kEuclidean:
    case Kind::kLinf:
      return;
    case Kind::kPreconditioned: {
      const Index n = dense_ ? dense_->p.rows() : diag_->size();
      if (n != dim) throw Error(ErrorCode::kLayoutMismatch, "preconditioner dimension");
      return;
    }
    default: {
      const auto& last = blocks_.back();
      if (last.offset + last.size() != dim)
        throw Error(ErrorCode::kLayoutMismatch, name() + " partition does not tile the vector");
    }
  }
}

double norm_value(const NormSpec& spec, const ParamVector& v) {
  spec.check_dimension(v.size());
  const Vector& x = v.flat();
  switch (spec.kind()) {
    case NormSpec::Kind::kEuclidean: return x.norm();
    case NormSpec::Kind::kPreconditioned: return std::sqrt(std::max(0.0, x.dot(spec.apply(x))));
    case NormSpec::Kind::kLinf: return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    case NormSpec::Kind::kBlockL12: {
      double s = 0.0;
      for (const auto& b : spec.blocks()) s += x.segment(b.offset, b.size()).norm();
      return s;
    }
    case NormSpec::Kind::kSpectralMax: {
      double m = 0.0;
      for (const auto& b : spec.blocks()) m = std::max(m, spectral_norm(block_matrix(x, b)));
      return m;
    }
    case NormSpec::Kind::kSpectralSum: {
      double s = 0.0;
      for (const auto& b : spec.blocks()) s += spectral_norm(block_matrix(x, b));
      return s;
    }
  }
  return 0.0;
}

double dual_norm(const NormSpec& spec, const ParamVector& g) {
  spec.check_dimension(g.size());
  const Vector& x = g.flat();
  switch (spec.kind()) {
    case NormSpec::Kind::kEuclidean: return x.norm();
    case NormSpec::Kind::kPreconditioned: return std::sqrt(std::max(0.0, x.dot(spec.solve(x))));
    case NormSpec::Kind::kLinf: return x.cwiseAbs().sum();
    case NormSpec::Kind::kBlockL12: {
      double m = 0.0;
      for (const auto& b : spec.blocks()) m = std::max(m, x.segment(b.offset, b.size()).norm());
      return m;
    }
    case NormSpec::Kind::kSpectralMax: {
      double s = 0.0;
      for (const auto& b : spec.blocks()) s += nuclear_norm(block_matrix(x, b));
      return s;
    }
    case NormSpec::Kind::kSpectralSum: {
      double m = 0.0;
      for (const auto& b : spec.blocks()) m = std::max(m, nuclear_norm(block_matrix(x, b)));
      return m;
    }
  }
  return 0.0;
}

ParamVector dual_vector(const NormSpec& spec, const ParamVector& g) {
  spec.check_dimension(g.size());
  if (g.is_zero()) throw Error(ErrorCode::kZeroVector, "dual vector of a zero gradient is the whole sphere");
  const Vector& x = g.flat();
  Vector out = Vector::Zero(x.size());
  switch (spec.kind()) {
    case NormSpec::Kind::kEuclidean:
      out = x / x.norm();
      break;
    case NormSpec::Kind::kPreconditioned: {
      const Vector s = spec.solve(x);
      out = s / std::sqrt(x.dot(s));
      break;
    }
    case NormSpec::Kind::kLinf:
      out = x.unaryExpr([](double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); });
      break;
    case NormSpec::Kind::kBlockL12: {
      std::vector<double> norms;
      for (const auto& b : spec.blocks()) norms.push_back(x.segment(b.offset, b.size()).norm());
      const auto& b = spec.blocks()[argmax_lowest(norms)];
      out.segment(b.offset, b.size()) = x.segment(b.offset, b.size()) / norms[argmax_lowest(norms)];
      break;
    }
    case NormSpec::Kind::kSpectralMax:
      for (const auto& b : spec.blocks()) {
        const Matrix m = block_matrix(x, b);
        if (m.isZero(0.0)) continue;
        MatMap(out.data() + b.offset, b.rows, b.cols) = polar_factor(m, spec.polar());
      }
      break;
    case NormSpec::Kind::kSpectralSum: {
      std::vector<double> nucs;
      for (const auto& b : spec.blocks()) nucs.push_back(nuclear_norm(block_matrix(x, b)));
      const auto& b = spec.blocks()[argmax_lowest(nucs)];
      MatMap(out.data() + b.offset, b.rows, b.cols) = polar_factor(block_matrix(x, b), spec.polar());
      break;
    }
  }
  return g.with(std::move(out));
}

ParamVector lmo(const NormSpec& spec, const ParamVector& g) {
  spec.check_dimension(g.size());
  if (g.is_zero()) return ParamVector::zeros(g.layout());
  return scale(-1.0, dual_vector(spec, g));
}

ParamVector project_sphere(const NormSpec& spec, const ParamVector& v) {
  spec.check_dimension(v.size());
  if (v.is_zero()) throw Error(ErrorCode::kZeroVector, "cannot project the zero vector onto the unit sphere");
  const Vector& x = v.flat();
  switch (spec.kind()) {
    case NormSpec::Kind::kLinf:
      return v.with(x.unaryExpr([](double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }));
    case NormSpec::Kind::kSpectralMax: {
      Vector out = Vector::Zero(x.size());
      for (const auto& b : spec.blocks()) {
        const Matrix m = block_matrix(x, b);
        if (m.isZero(0.0)) continue;
        MatMap(out.data() + b.offset, b.rows, b.cols) = polar_factor(m, spec.polar());
      }
      return v.with(std::move(out));
    }
    default:
      return scale(1.0 / norm_value(spec, v), v);
  }
}

}  // namespace neos
