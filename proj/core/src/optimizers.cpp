#include "neos/optimizers.hpp"

#include <chrono>
#include <cmath>

namespace neos {

void OptimizerSpec::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  switch (stepper) {
    case StepperKind::kBlockCd:
      if (norm.kind() != NormSpec::Kind::kBlockL12)
        throw Error(ErrorCode::kInvalidArgument, "block_cd stepper needs the block_l12 norm");
      break;
    case StepperKind::kSpectral:
      if (norm.kind() != NormSpec::Kind::kSpectralMax)
        throw Error(ErrorCode::kInvalidArgument, "spectral stepper needs the spectral_max norm");
      break;
    case StepperKind::kRmsprop:
      if (!rmsprop) throw Error(ErrorCode::kInvalidArgument, "rmsprop stepper needs beta2/epsilon");
      if (!(rmsprop->beta2 >= 0.0 && rmsprop->beta2 < 1.0))
        throw Error(ErrorCode::kInvalidArgument, "beta2 must lie in [0, 1)");
      if (!(rmsprop->epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
      break;
    case StepperKind::kGeneric:
      if (rmsprop) throw Error(ErrorCode::kInvalidArgument, "rmsprop schedule given without the rmsprop stepper");
      break;
  }
}

namespace {

double threshold_for(StepMode mode, double eta, double dual) {
  return mode == StepMode::kUnnormalized ? 2.0 / eta : 2.0 * dual / eta;
}

// Shared tail of every stepper: evaluate the new point and fill the record.
StepResult finish(const Objective& obj, const ParamVector& w, double loss, const ParamVector& g, double dual,
                  const ParamVector& w_next, double eta, StepMode mode, const NormSpec& geometry) {
  StepResult r;
  StepRecord& rec = r.record;
  rec.loss_before = loss;
  rec.dual_grad_norm = dual;
  rec.eta = eta;
  rec.mode = mode;
  rec.threshold = threshold_for(mode, eta, dual);
  rec.update = w_next - w;
  rec.loss_after = obj.loss(w_next);
  rec.diverged = !std::isfinite(rec.loss_after) || rec.loss_after > kDivergenceLoss || !w_next.all_finite();
  if (!rec.diverged && !rec.update.is_zero())
    rec.dir_smoothness = directional_smoothness(loss, rec.loss_after, g, rec.update, geometry);
  r.w = w_next;
  return r;
}

StepResult halted(const ParamVector& w, double loss, double dual, double eta, StepMode mode, bool diverged) {
  StepResult r;
  r.w = w;
  r.record.loss_before = loss;
  r.record.loss_after = loss;
  r.record.dual_grad_norm = dual;
  r.record.eta = eta;
  r.record.mode = mode;
  r.record.threshold = threshold_for(mode, eta, std::isfinite(dual) ? dual : 0.0);
  r.record.update = ParamVector::zeros(w.layout());
  r.record.diverged = diverged;
  r.record.stationary = !diverged;
  return r;
}

}  // namespace

StepResult step(const Objective& obj, const ParamVector& w, const OptimizerSpec& spec) {
  if (!(spec.eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  spec.norm.check_dimension(w.size());
  const auto [loss, g] = obj.loss_and_grad(w);
  if (!g.all_finite() || !std::isfinite(loss))
    return halted(w, loss, std::numeric_limits<double>::quiet_NaN(), spec.eta, spec.mode, true);
  const double dual = dual_norm(spec.norm, g);
  if (dual <= kStationaryTol) return halted(w, loss, dual, spec.eta, spec.mode, false);
  const ParamVector dv = dual_vector(spec.norm, g);
  const double scale = spec.mode == StepMode::kUnnormalized ? spec.eta * dual : spec.eta;
  return finish(obj, w, loss, g, dual, axpy(-scale, dv, w), spec.eta, spec.mode, spec.norm);
}

StepResult block_cd_step(const Objective& obj, const ParamVector& w, const BlockLayout& partition, double eta,
                         StepMode mode) {
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  if (partition.total_dim() != w.size()) throw Error(ErrorCode::kLayoutMismatch, "block partition dimension");
  const NormSpec geometry = NormSpec::block_l12(partition);
  const auto [loss, g] = obj.loss_and_grad(w);
  if (!g.all_finite() || !std::isfinite(loss))
    return halted(w, loss, std::numeric_limits<double>::quiet_NaN(), eta, mode, true);

  const auto& blocks = partition.blocks();
  std::vector<double> norms(blocks.size());
  double top = 0.0;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    norms[l] = g.flat().segment(blocks[l].offset, blocks[l].size).norm();
    top = std::max(top, norms[l]);
  }
  if (top <= kStationaryTol) return halted(w, loss, top, eta, mode, false);

  std::vector<std::size_t> tied;
  for (std::size_t l = 0; l < blocks.size(); ++l)
    if (norms[l] >= top * (1.0 - 1e-12)) tied.push_back(l);
  // Unnormalized: -eta/|J| g^l. Normalized divides by ||g||_* = top.
  const double scale = (mode == StepMode::kUnnormalized ? eta : eta / top) / static_cast<double>(tied.size());
  Vector next = w.flat();
  for (const std::size_t l : tied) {
    const auto& b = blocks[l];
    next.segment(b.offset, b.size) -= scale * g.flat().segment(b.offset, b.size);
  }
  return finish(obj, w, loss, g, top, w.with(std::move(next)), eta, mode, geometry);
}

StepResult spectral_step(const Objective& obj, const ParamVector& w, const std::vector<std::pair<Index, Index>>& shapes,
                         double eta, const PolarMethod& method, StepMode mode) {
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  const NormSpec geometry = NormSpec::spectral_max(shapes, method);
  geometry.check_dimension(w.size());
  const auto [loss, g] = obj.loss_and_grad(w);
  if (!g.all_finite() || !std::isfinite(loss))
    return halted(w, loss, std::numeric_limits<double>::quiet_NaN(), eta, mode, true);

  double gamma = 0.0;
  std::vector<Matrix> polars(geometry.blocks().size());
  for (std::size_t l = 0; l < geometry.blocks().size(); ++l) {
    const auto& b = geometry.blocks()[l];
    const Matrix gl = Eigen::Map<const RowMatrix>(g.flat().data() + b.offset, b.rows, b.cols);
    if (gl.norm() <= kStationaryTol) continue;
    gamma += nuclear_norm(gl);
    polars[l] = polar_factor(gl, method);
  }
  if (gamma <= kStationaryTol) return halted(w, loss, gamma, eta, mode, false);

  const double scale = mode == StepMode::kUnnormalized ? eta * gamma : eta;
  Vector next = w.flat();
  for (std::size_t l = 0; l < geometry.blocks().size(); ++l) {
    if (polars[l].size() == 0) continue;
    const auto& b = geometry.blocks()[l];
    Eigen::Map<RowMatrix>(next.data() + b.offset, b.rows, b.cols) -= scale * polars[l];
  }
  return finish(obj, w, loss, g, gamma, w.with(std::move(next)), eta, mode, geometry);
}

StepResult rmsprop_step(const Objective& obj, const ParamVector& w, RmspropState& state, double beta2, double epsilon,
                        double eta, StepMode mode) {
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (state.nu.size() == 0) state.nu = Vector::Zero(w.size());
  if (state.nu.size() != w.size()) throw Error(ErrorCode::kLayoutMismatch, "rmsprop state dimension");
  if ((state.nu.array() < 0.0).any()) throw Error(ErrorCode::kInvalidArgument, "rmsprop state must be nonnegative");

  const auto [loss, g] = obj.loss_and_grad(w);
  if (!g.all_finite() || !std::isfinite(loss))
    return halted(w, loss, std::numeric_limits<double>::quiet_NaN(), eta, mode, true);

  state.nu = beta2 * state.nu + (1.0 - beta2) * g.flat().cwiseAbs2();
  const Vector p = state.nu.cwiseSqrt().array() + epsilon;
  const NormSpec geometry = NormSpec::preconditioned_diagonal(p);
  const Vector pinv_g = g.flat().cwiseQuotient(p);
  const double dual = std::sqrt(std::max(0.0, g.flat().dot(pinv_g)));
  if (dual <= kStationaryTol) {
    StepResult r = halted(w, loss, dual, eta, mode, false);
    r.record.preconditioner = p;
    return r;
  }
  // Unnormalized: w - eta P^{-1} g. Normalized: w - eta P^{-1} g / ||g||_*.
  const double scale = mode == StepMode::kUnnormalized ? eta : eta / dual;
  StepResult r = finish(obj, w, loss, g, dual, w.with(w.flat() - scale * pinv_g), eta, mode, geometry);
  r.record.preconditioner = p;
  return r;
}

NormSpec step_geometry(const OptimizerSpec& spec, const StepRecord& record) {
  if (spec.stepper == StepperKind::kRmsprop) {
    if (!record.preconditioner) throw Error(ErrorCode::kInvalidArgument, "record carries no preconditioner");
    return NormSpec::preconditioned_diagonal(*record.preconditioner);
  }
  return spec.norm;
}

RunResult run(const Objective& obj, const ParamVector& w0, const OptimizerSpec& spec, const RunOptions& opt) {
  if (opt.steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  if (opt.cadence < 0) throw Error(ErrorCode::kInvalidArgument, "cadence must be >= 0");
  spec.validate();
  require_same_layout(w0.layout(), obj.layout(), "run");

  std::vector<std::pair<Index, Index>> shapes;
  if (spec.stepper == StepperKind::kSpectral)
    for (const auto& b : spec.norm.blocks()) shapes.emplace_back(b.rows, b.cols);

  RunResult out;
  RmspropState state;
  ParamVector w = w0;
  if (opt.keep_iterates) out.iterates.push_back(w);
  for (int t = 0; t < opt.steps; ++t) {
    StepResult r;
    switch (spec.stepper) {
      case StepperKind::kGeneric:
        r = step(obj, w, spec);
        break;
      case StepperKind::kBlockCd: {
        // Rebuild the partition from the norm's blocks (names are irrelevant here).
        std::vector<BlockSpec> specs;
        for (std::size_t l = 0; l < spec.norm.blocks().size(); ++l)
          specs.push_back({"b" + std::to_string(l), {spec.norm.blocks()[l].size()}});
        r = block_cd_step(obj, w, *BlockLayout::make(std::move(specs)), spec.eta, spec.mode);
        break;
      }
      case StepperKind::kSpectral:
        r = spectral_step(obj, w, shapes, spec.eta, spec.norm.polar(), spec.mode);
        break;
      case StepperKind::kRmsprop:
        r = rmsprop_step(obj, w, state, spec.rmsprop->beta2, spec.rmsprop->epsilon, spec.eta, spec.mode);
        break;
    }
    StepRecord& rec = r.record;
    rec.step = t;
    if (opt.cadence > 0 && t % opt.cadence == 0 && !rec.diverged) {
      const auto start = std::chrono::steady_clock::now();
      FwConfig fw = opt.fw;
      fw.seed = opt.fw.seed + static_cast<std::uint64_t>(t);
      const SharpnessEstimate s = estimate_sharpness([&](const ParamVector& d) { return obj.hvp(w, d); }, w.layout(),
                                                     step_geometry(spec, rec), opt.sharpness_method, fw, opt.power);
      rec.sharpness = s.value;
      rec.fw_gap = s.fw_gap;
      rec.sharpness_restarts = s.restarts_used;
      rec.sharpness_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    if (!opt.keep_updates) rec.update = ParamVector();
    if (opt.on_record) opt.on_record(rec);
    const bool diverged = rec.diverged;
    out.records.push_back(std::move(rec));
    if (diverged) {
      out.diverged = true;
      break;
    }
    w = std::move(r.w);
    if (opt.keep_iterates) out.iterates.push_back(w);
  }
  out.final_w = w;
  return out;
}

}  // namespace neos
