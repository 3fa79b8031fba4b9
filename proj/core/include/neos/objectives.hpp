#pragma once

// Differentiable objectives with exact Hessian-vector products.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "neos/data_io.hpp"
#include "neos/param.hpp"

namespace neos {

/// loss / gradient / Hessian-vector oracle. Implementations are immutable and
/// every method may be called concurrently. Non-finite parameters produce an
/// infinite loss and NaN-filled vectors instead of throwing.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual const LayoutPtr& layout() const = 0;
  virtual std::string kind() const = 0;

  virtual double loss(const ParamVector& w) const = 0;
  virtual ParamVector grad(const ParamVector& w) const = 0;
  /// Exact second directional derivative, grad'(w)[d].
  virtual ParamVector hvp(const ParamVector& w, const ParamVector& d) const = 0;

  /// Loss and gradient together (one forward pass where possible).
  virtual std::pair<double, ParamVector> loss_and_grad(const ParamVector& w) const {
    return {loss(w), grad(w)};
  }
};

using ObjectivePtr = std::shared_ptr<const Objective>;
using HvpOracle = std::function<ParamVector(const ParamVector&)>;

/// d -> hvp(w, d) bound to a fixed point.
HvpOracle bind_hvp(const ObjectivePtr& obj, const ParamVector& w);
/// d -> H d for an explicit symmetric matrix.
HvpOracle matrix_hvp(const Matrix& h, LayoutPtr layout);

/// L(w) = 1/2 w^T H w.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(const Matrix& h, LayoutPtr layout = nullptr);

  const LayoutPtr& layout() const override { return layout_; }
  std::string kind() const override { return "quadratic"; }
  double loss(const ParamVector& w) const override;
  ParamVector grad(const ParamVector& w) const override;
  ParamVector hvp(const ParamVector& w, const ParamVector& d) const override;

  const Matrix& hessian() const { return h_; }

 private:
  Matrix h_;
  LayoutPtr layout_;
};

enum class Activation { kTanh, kRelu };

/// Fully connected network with MSE loss (1/2n) sum_i ||f(x_i) - y_i||^2.
/// Blocks are "layer<k>.weight" (out x in) and "layer<k>.bias" (out); the
/// last layer is linear.
class MlpObjective final : public Objective {
 public:
  /// widths = {input, hidden..., output}; must match the dataset.
  MlpObjective(std::vector<Index> widths, Activation activation, Dataset data);

  const LayoutPtr& layout() const override { return layout_; }
  std::string kind() const override { return "mlp"; }
  double loss(const ParamVector& w) const override;
  ParamVector grad(const ParamVector& w) const override;
  ParamVector hvp(const ParamVector& w, const ParamVector& d) const override;
  std::pair<double, ParamVector> loss_and_grad(const ParamVector& w) const override;

  /// Network output for every example (n x q).
  Matrix predict(const ParamVector& w) const;
  /// Fan-in scaled Gaussian weights (std 1/sqrt(fan_in)), zero biases.
  ParamVector init(RngState& rng) const;
  /// Smallest |preactivation| over the dataset; used to keep finite
  /// difference checks away from relu kinks.
  double min_abs_preactivation(const ParamVector& w) const;

  const std::vector<Index>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  const Dataset& data() const { return data_; }

 private:
  struct Pass;
  Pass forward(const ParamVector& w) const;

  std::vector<Index> widths_;
  Activation activation_;
  Dataset data_;
  LayoutPtr layout_;
};

/// Frozen second-order model of `base` at an anchor point:
/// L(w) = L(a) + <g_a, w - a> + 1/2 (w - a)^T H_a (w - a), H_a applied lazily.
class TaylorObjective final : public Objective {
 public:
  TaylorObjective(ObjectivePtr base, ParamVector anchor);

  const LayoutPtr& layout() const override { return anchor_.layout(); }
  std::string kind() const override { return "taylor"; }
  double loss(const ParamVector& w) const override;
  ParamVector grad(const ParamVector& w) const override;
  ParamVector hvp(const ParamVector& w, const ParamVector& d) const override;
  std::pair<double, ParamVector> loss_and_grad(const ParamVector& w) const override;

  const ParamVector& anchor() const { return anchor_; }
  double anchor_loss() const { return anchor_loss_; }
  const ParamVector& anchor_grad() const { return anchor_grad_; }

 private:
  ObjectivePtr base_;
  ParamVector anchor_;
  double anchor_loss_;
  ParamVector anchor_grad_;
};

std::shared_ptr<const TaylorObjective> make_taylor(const ObjectivePtr& obj, const ParamVector& anchor);

/// Dense Hessian assembled column by column from HVPs (small d only).
Matrix dense_hessian(const HvpOracle& hvp, const LayoutPtr& layout);

}  // namespace neos
