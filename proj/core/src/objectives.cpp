#include "neos/objectives.hpp"

#include <cmath>
#include <limits>

namespace neos {

namespace {

ParamVector nan_like(const LayoutPtr& layout) {
  return ParamVector(layout, Vector::Constant(layout->total_dim(), std::numeric_limits<double>::quiet_NaN()));
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

HvpOracle bind_hvp(const ObjectivePtr& obj, const ParamVector& w) {
  return [obj, w](const ParamVector& d) { return obj->hvp(w, d); };
}

HvpOracle matrix_hvp(const Matrix& h, LayoutPtr layout) {
  if (!layout) layout = BlockLayout::flat(h.rows());
  return [h, layout](const ParamVector& d) { return ParamVector(layout, h * d.flat()); };
}

Matrix dense_hessian(const HvpOracle& hvp, const LayoutPtr& layout) {
  const Index n = layout->total_dim();
  Matrix h(n, n);
  for (Index j = 0; j < n; ++j) h.col(j) = hvp(ParamVector(layout, Vector::Unit(n, j))).flat();
  return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticObjective::QuadraticObjective(const Matrix& h, LayoutPtr layout)
    : h_(0.5 * (h + h.transpose())), layout_(layout ? std::move(layout) : BlockLayout::flat(h.rows())) {
  if (h.rows() != h.cols()) throw Error(ErrorCode::kInvalidArgument, "Hessian must be square");
  if (!h.allFinite()) throw Error(ErrorCode::kNonFinite, "Hessian");
  if (layout_->total_dim() != h.rows()) throw Error(ErrorCode::kLayoutMismatch, "quadratic layout dimension");
}

double QuadraticObjective::loss(const ParamVector& w) const {
  require_same_layout(w.layout(), layout_, "quadratic loss");
  if (!w.all_finite()) return kInf;
  return 0.5 * w.flat().dot(h_ * w.flat());
}

ParamVector QuadraticObjective::grad(const ParamVector& w) const {
  require_same_layout(w.layout(), layout_, "quadratic grad");
  if (!w.all_finite()) return nan_like(layout_);
  return w.with(h_ * w.flat());
}

ParamVector QuadraticObjective::hvp(const ParamVector& w, const ParamVector& d) const {
  require_same_layout(d.layout(), layout_, "quadratic hvp");
  if (!w.all_finite()) return nan_like(layout_);
  return d.with(h_ * d.flat());
}

// ---------------------------------------------------------------------------
// MLP

struct MlpObjective::Pass {
  std::vector<Matrix> a;  // a[0] = inputs, a[k] = layer-k output
  std::vector<Matrix> z;  // z[k] = layer-k preactivation (z[0] unused)
};

namespace {

using WeightMap = Eigen::Map<const RowMatrix>;

}  // namespace

MlpObjective::MlpObjective(std::vector<Index> widths, Activation activation, Dataset data)
    : widths_(std::move(widths)), activation_(activation), data_(std::move(data)) {
  if (widths_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "MLP needs input and output widths");
  validate_dataset(data_);
  if (widths_.front() != data_.input_dim() || widths_.back() != data_.output_dim())
    throw Error(ErrorCode::kInvalidArgument, "MLP widths do not match the dataset");
  std::vector<BlockSpec> specs;
  for (std::size_t k = 1; k < widths_.size(); ++k) {
    specs.push_back({"layer" + std::to_string(k - 1) + ".weight", {widths_[k], widths_[k - 1]}});
    specs.push_back({"layer" + std::to_string(k - 1) + ".bias", {widths_[k]}});
  }
  layout_ = BlockLayout::make(std::move(specs));
}

MlpObjective::Pass MlpObjective::forward(const ParamVector& w) const {
  const std::size_t layers = widths_.size() - 1;
  Pass p;
  p.a.resize(layers + 1);
  p.z.resize(layers + 1);
  p.a[0] = data_.inputs;
  for (std::size_t k = 1; k <= layers; ++k) {
    const WeightMap wk = w.block(2 * (k - 1));
    const auto bk = w.segment(2 * (k - 1) + 1);
    p.z[k] = p.a[k - 1] * wk.transpose();
    p.z[k].rowwise() += bk.transpose();
    if (k == layers) {
      p.a[k] = p.z[k];
    } else if (activation_ == Activation::kTanh) {
      p.a[k] = p.z[k].array().tanh().matrix();
    } else {
      p.a[k] = p.z[k].cwiseMax(0.0);
    }
  }
  return p;
}

double MlpObjective::loss(const ParamVector& w) const {
  require_same_layout(w.layout(), layout_, "mlp loss");
  if (!w.all_finite()) return kInf;
  const Pass p = forward(w);
  const double n = static_cast<double>(data_.size());
  const double l = 0.5 * (p.a.back() - data_.targets).squaredNorm() / n;
  return std::isfinite(l) ? l : kInf;
}

Matrix MlpObjective::predict(const ParamVector& w) const {
  require_same_layout(w.layout(), layout_, "mlp predict");
  return forward(w).a.back();
}

std::pair<double, ParamVector> MlpObjective::loss_and_grad(const ParamVector& w) const {
  require_same_layout(w.layout(), layout_, "mlp grad");
  if (!w.all_finite()) return {kInf, nan_like(layout_)};
  const Pass p = forward(w);
  const std::size_t layers = widths_.size() - 1;
  const double n = static_cast<double>(data_.size());
  Matrix delta = (p.a.back() - data_.targets) / n;
  const double l = 0.5 * n * delta.squaredNorm();

  Vector g(layout_->total_dim());
  for (std::size_t k = layers; k >= 1; --k) {
    const auto& wb = layout_->block(2 * (k - 1));
    const auto& bb = layout_->block(2 * (k - 1) + 1);
    Eigen::Map<RowMatrix>(g.data() + wb.offset, wb.rows, wb.cols) = delta.transpose() * p.a[k - 1];
    g.segment(bb.offset, bb.size) = delta.colwise().sum().transpose();
    if (k > 1) {
      const WeightMap wk = w.block(2 * (k - 1));
      Matrix back = delta * wk;
      if (activation_ == Activation::kTanh) {
        delta = back.array() * (1.0 - p.a[k - 1].array().square());
      } else {
        delta = back.array() * (p.z[k - 1].array() > 0.0).cast<double>();
      }
    }
  }
  return {std::isfinite(l) ? l : kInf, ParamVector(layout_, std::move(g))};
}

ParamVector MlpObjective::grad(const ParamVector& w) const { return loss_and_grad(w).second; }

// Forward-over-reverse (Pearlmutter R-operator) for the fixed architecture.
ParamVector MlpObjective::hvp(const ParamVector& w, const ParamVector& d) const {
  require_same_layout(w.layout(), layout_, "mlp hvp");
  require_same_layout(d.layout(), layout_, "mlp hvp direction");
  if (!w.all_finite()) return nan_like(layout_);
  const std::size_t layers = widths_.size() - 1;
  const Pass p = forward(w);
  const bool tanh = activation_ == Activation::kTanh;

  // sigma'(z) for the hidden layers, expressed through the activations.
  auto dact = [&](std::size_t k) -> Matrix {
    if (tanh) return (1.0 - p.a[k].array().square()).matrix();
    return (p.z[k].array() > 0.0).cast<double>().matrix();
  };

  // R-forward.
  std::vector<Matrix> rz(layers + 1), ra(layers + 1);
  ra[0] = Matrix::Zero(p.a[0].rows(), p.a[0].cols());
  for (std::size_t k = 1; k <= layers; ++k) {
    const WeightMap wk = w.block(2 * (k - 1));
    const WeightMap vk = d.block(2 * (k - 1));
    const auto vb = d.segment(2 * (k - 1) + 1);
    rz[k] = p.a[k - 1] * vk.transpose();
    if (k > 1) rz[k].noalias() += ra[k - 1] * wk.transpose();
    rz[k].rowwise() += vb.transpose();
    ra[k] = (k == layers) ? rz[k] : Matrix(dact(k).cwiseProduct(rz[k]));
  }

  // R-backward.
  const double n = static_cast<double>(data_.size());
  Matrix delta = (p.a.back() - data_.targets) / n;
  Matrix rdelta = ra[layers] / n;
  Vector out(layout_->total_dim());
  for (std::size_t k = layers; k >= 1; --k) {
    const auto& wb = layout_->block(2 * (k - 1));
    const auto& bb = layout_->block(2 * (k - 1) + 1);
    Matrix rgw = rdelta.transpose() * p.a[k - 1];
    if (k > 1) rgw.noalias() += delta.transpose() * ra[k - 1];
    Eigen::Map<RowMatrix>(out.data() + wb.offset, wb.rows, wb.cols) = rgw;
    out.segment(bb.offset, bb.size) = rdelta.colwise().sum().transpose();
    if (k > 1) {
      const WeightMap wk = w.block(2 * (k - 1));
      const WeightMap vk = d.block(2 * (k - 1));
      const Matrix back = delta * wk;
      Matrix rback = rdelta * wk;
      rback.noalias() += delta * vk;
      const Matrix s1 = dact(k - 1);
      Matrix next_r = rback.cwiseProduct(s1);
      if (tanh) {
        // sigma''(z) = -2 a (1 - a^2)
        const Matrix s2 = (-2.0 * p.a[k - 1].array() * s1.array()).matrix();
        next_r.array() += back.array() * s2.array() * rz[k - 1].array();
      }
      delta = back.cwiseProduct(s1);
      rdelta = std::move(next_r);
    }
  }
  return ParamVector(layout_, std::move(out));
}

ParamVector MlpObjective::init(RngState& rng) const {
  Vector v = Vector::Zero(layout_->total_dim());
  for (std::size_t k = 1; k < widths_.size(); ++k) {
    const auto& wb = layout_->block(2 * (k - 1));
    const double sd = 1.0 / std::sqrt(static_cast<double>(widths_[k - 1]));
    for (Index i = 0; i < wb.size; ++i) v[wb.offset + i] = sd * rng.normal();
  }
  return ParamVector(layout_, std::move(v));
}

double MlpObjective::min_abs_preactivation(const ParamVector& w) const {
  const Pass p = forward(w);
  double m = kInf;
  for (std::size_t k = 1; k + 1 < p.z.size(); ++k) m = std::min(m, p.z[k].cwiseAbs().minCoeff());
  return m;
}

// ---------------------------------------------------------------------------
// Taylor

TaylorObjective::TaylorObjective(ObjectivePtr base, ParamVector anchor)
    : base_(std::move(base)), anchor_(std::move(anchor)) {
  require_same_layout(anchor_.layout(), base_->layout(), "taylor anchor");
  auto [l, g] = base_->loss_and_grad(anchor_);
  anchor_loss_ = l;
  anchor_grad_ = std::move(g);
}

std::pair<double, ParamVector> TaylorObjective::loss_and_grad(const ParamVector& w) const {
  require_same_layout(w.layout(), anchor_.layout(), "taylor");
  if (!w.all_finite()) return {kInf, nan_like(anchor_.layout())};
  const ParamVector step = w - anchor_;
  if (step.is_zero()) return {anchor_loss_, anchor_grad_};
  const ParamVector h_step = base_->hvp(anchor_, step);
  const double l = anchor_loss_ + inner(anchor_grad_, step) + 0.5 * inner(step, h_step);
  return {std::isfinite(l) ? l : kInf, anchor_grad_ + h_step};
}

double TaylorObjective::loss(const ParamVector& w) const { return loss_and_grad(w).first; }

ParamVector TaylorObjective::grad(const ParamVector& w) const { return loss_and_grad(w).second; }

ParamVector TaylorObjective::hvp(const ParamVector& w, const ParamVector& d) const {
  require_same_layout(w.layout(), anchor_.layout(), "taylor hvp");
  return base_->hvp(anchor_, d);
}

std::shared_ptr<const TaylorObjective> make_taylor(const ObjectivePtr& obj, const ParamVector& anchor) {
  return std::make_shared<const TaylorObjective>(obj, anchor);
}

}  // namespace neos
