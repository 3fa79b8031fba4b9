#include "neos/harness/commands.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <map>

#include "neos/harness/svg.hpp"
#include "neos/spectra.hpp"

namespace neos::harness {

namespace fs = std::filesystem;

namespace {

bool wants(const ExperimentConfig& cfg, const std::string& format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out << text;
}

void write_json(const fs::path& file, const nlohmann::ordered_json& j) { write_text(file, j.dump(2) + "\n"); }

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

std::vector<double> smoothed(const ExperimentConfig& cfg, const std::vector<double>& v) {
  return cfg.output.smoothing > 0 ? exp_smooth(v, cfg.output.smoothing) : v;
}

void train_plot(const ExperimentConfig& cfg, const std::vector<RunLogRow>& rows, const fs::path& file) {
  const bool normalized = cfg.optimizer.mode == "normalized";
  const double thr = 2.0 / cfg.optimizer.eta;
  std::vector<double> x, loss, dual, dir, sx, sharp;
  for (const auto& r : rows) {
    x.push_back(r.step);
    loss.push_back(r.loss);
    dual.push_back(r.dual_grad_norm);
    dir.push_back(r.normalized_dir_smoothness.value_or(nan()));
    if (r.normalized_sharpness) {
      sx.push_back(r.step);
      sharp.push_back(*r.normalized_sharpness);
    }
  }
  const double x0 = 0, x1 = rows.empty() ? 1.0 : rows.back().step;
  const std::string suffix = normalized ? " / ||g||_*" : "";
  Panel p1{"train loss", "step", "loss", true, {{"loss", x, smoothed(cfg, loss)}}, {}};
  Panel p2{"dual gradient norm", "step", "||g||_*", true, {{"||g||_*", x, smoothed(cfg, dual)}}, {}};
  Panel p3{"directional smoothness" + suffix, "step", "D", false,
           {{"D" + suffix, x, dir}, hline("2/eta", thr, x0, x1)}, {}};
  Series s4{"sharpness" + suffix, sx, sharp};
  s4.color = "#2ca02c";
  s4.markers = sx.size() < 400;
  Panel p4{"generalized sharpness" + suffix, "step", "S", false, {s4, hline("2/eta", thr, x0, x1)}, {}};
  write_svg(file, {p1, p2, p3, p4}, 2);
}

std::vector<double> eta_grid(const ExperimentConfig& cfg, double s) {
  std::vector<double> etas;
  for (double m : cfg.quad.eta_over_s) etas.push_back(m / s);
  etas.insert(etas.end(), cfg.quad.etas.begin(), cfg.quad.etas.end());
  if (etas.empty())
    for (double m : {0.5, 1.0, 1.5, 1.9, 1.98, 2.02, 2.1, 2.5, 3.0}) etas.push_back(m / s);
  return etas;
}

template <class F>
auto parallel_map(int n, int threads, F f) {
  using R = decltype(f(0));
  std::vector<R> out(static_cast<std::size_t>(n));
  threads = std::max(1, std::min(threads, n));
  std::vector<std::future<void>> pool;
  for (int t = 0; t < threads; ++t)
    pool.push_back(std::async(std::launch::async, [&, t] {
      for (int i = t; i < n; i += threads) out[static_cast<std::size_t>(i)] = f(i);
    }));
  for (auto& fu : pool) fu.get();
  return out;
}

// Runs the configured optimizer keeping iterates w_0..w_steps (or until divergence).
RunResult trajectory(const ExperimentConfig& cfg, const Objective& obj, int steps) {
  const OptimizerSpec spec = build_optimizer(cfg, *obj.layout());
  RunOptions opt = build_run_options(cfg);
  opt.steps = steps;
  opt.cadence = 0;
  opt.keep_iterates = true;
  return run(obj, initial_point(obj, cfg.seed), spec, opt);
}

}  // namespace

fs::path resolve_output_dir(const fs::path& dir) {
  const char* root = std::getenv(kOutputRootEnv);
  if (root && *root && dir.is_relative()) return fs::path(root) / dir;
  return dir;
}

// --- train ------------------------------------------------------------------------

TrainResult cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_text(out / "config.yaml", serialize_config(cfg));

  const ObjectivePtr obj = build_objective(cfg);
  const OptimizerSpec spec = build_optimizer(cfg, *obj->layout());
  RunOptions opt = build_run_options(cfg);

  TrainResult res;
  RunLogWriter writer(out, RunLogMeta{kRunLogSchema, spec.mode, spec.eta}, wants(cfg, "csv"), wants(cfg, "jsonl"));
  double sharpness_ms = 0;
  opt.on_record = [&](const StepRecord& rec) {
    res.rows.push_back(make_row(rec));
    writer.append(res.rows.back());
    sharpness_ms += rec.sharpness_ms;
  };
  const auto start = std::chrono::steady_clock::now();
  res.run = run(*obj, initial_point(*obj, cfg.seed), spec, opt);
  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  nlohmann::ordered_json timing;
  timing["wall_ms"] = wall;
  timing["sharpness_ms"] = sharpness_ms;
  timing["steps"] = res.rows.size();
  timing["diverged"] = res.run.diverged;
  write_json(out / "timing.json", timing);
  if (wants(cfg, "svg")) train_plot(cfg, res.rows, out / "train.svg");
  return res;
}

// --- quad -------------------------------------------------------------------------

QuadResult cmd_quad(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_text(out / "config.yaml", serialize_config(cfg));
  const Matrix h = build_quadratic_matrix(cfg);
  const LayoutPtr layout = BlockLayout::flat(h.rows());
  OracleOptions oo;
  oo.seed = cfg.measurement.fw_seed;
  QuadResult res;
  res.constants = oracle_constants(h, build_norm(cfg.optimizer.norm, *layout), layout, oo);
  const QuadCase& qc = res.constants;
  if (!(qc.s > 0)) throw Error(ErrorCode::kInvalidArgument, "stability diagram needs S > 0");

  const std::vector<double> etas = eta_grid(cfg, qc.s);
  res.rows = stability_diagram(qc, etas, cfg.quad.t_max, cfg.seed, cfg.threads);
  if (cfg.quad.bisect) res.bisected_threshold = bisect_threshold(qc, 1.0 / qc.s, 3.0 / qc.s, cfg.quad.t_max);

  std::string csv = "eta,eta_times_s,init,outcome,steps,final_ratio\n";
  for (const auto& r : res.rows)
    csv += format_double(r.eta) + "," + format_double(r.eta * qc.s) + "," + r.init + "," + to_string(r.outcome) +
           "," + std::to_string(r.steps) + "," + format_double(r.final_ratio) + "\n";
  write_text(out / "quad.csv", csv);

  nlohmann::ordered_json c;
  c["norm"] = qc.norm.name();
  c["S"] = qc.s;
  c["mu"] = qc.mu;
  c["S_method"] = qc.s_method;
  c["mu_method"] = qc.mu_method;
  c["S_exact"] = qc.s_exact;
  c["mu_exact"] = qc.mu_exact;
  c["two_over_S"] = 2.0 / qc.s;
  c["two_over_mu"] = qc.mu > 0 ? nlohmann::json(2.0 / qc.mu) : nlohmann::json();
  c["bisected_threshold"] = res.bisected_threshold ? nlohmann::json(*res.bisected_threshold) : nlohmann::json();
  c["dhat"] = std::vector<double>(qc.dhat.flat().data(), qc.dhat.flat().data() + qc.dhat.size());
  write_json(out / "constants.json", c);

  if (wants(cfg, "svg")) {
    // Outcome code on the y axis: 0 converged, 1 oscillating, 2 diverged.
    auto code = [](Outcome o) { return o == Outcome::kConverged ? 0.0 : o == Outcome::kOscillating ? 1.0 : 2.0; };
    Series dh{"w0 = dhat", {}, {}, "#1f77b4"}, rnd{"w0 random", {}, {}, "#ff7f0e"};
    dh.markers = rnd.markers = true;
    for (const auto& r : res.rows) {
      auto& s = r.init == "dhat" ? dh : rnd;
      s.x.push_back(r.eta * qc.s);
      s.y.push_back(code(r.outcome) + (r.init == "dhat" ? -0.05 : 0.05));
    }
    Series two_mu{"2/mu", {}, {}, "#9467bd", true};
    if (qc.mu > 0) {
      two_mu.x = {2 * qc.s / qc.mu, 2 * qc.s / qc.mu};
      two_mu.y = {-0.2, 2.2};
    }
    Panel p{"stability diagram (" + qc.norm.name() + ")", "eta * S", "0 conv / 1 osc / 2 div", false,
            {dh, rnd, two_mu}, 2.0};
    Series ratio_dh{"L_T/L_0, dhat", {}, {}, "#1f77b4"};
    ratio_dh.markers = true;
    for (const auto& r : res.rows)
      if (r.init == "dhat") {
        ratio_dh.x.push_back(r.eta * qc.s);
        ratio_dh.y.push_back(r.final_ratio);
      }
    Panel p2{"final loss ratio", "eta * S", "L_T / L_0", true, {ratio_dh}, 2.0};
    write_svg(out / "quad.svg", {p, p2}, 2);
  }
  return res;
}

// --- sweep ------------------------------------------------------------------------

std::vector<SweepCell> cmd_sweep(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_text(out / "config.yaml", serialize_config(cfg));
  std::vector<std::string> norms = cfg.sweep.norms;
  if (norms.empty()) norms.push_back(cfg.optimizer.norm.kind);
  std::vector<double> etas = cfg.sweep.etas;
  if (etas.empty()) etas.push_back(cfg.optimizer.eta);

  std::vector<ExperimentConfig> cells;
  std::vector<SweepCell> meta;
  for (const auto& n : norms)
    for (std::size_t k = 0; k < etas.size(); ++k) {
      ExperimentConfig c = cfg;
      c.optimizer.norm.kind = n;
      c.optimizer.eta = etas[k];
      c.threads = 1;
      c.sweep = {};
      validate_config(c);
      cells.push_back(c);
      meta.push_back({n, etas[k], out / (n + "_eta" + std::to_string(k))});
    }
  auto results = parallel_map(static_cast<int>(cells.size()), cfg.threads, [&](int i) {
    const auto r = cmd_train(cells[static_cast<std::size_t>(i)], meta[static_cast<std::size_t>(i)].dir);
    SweepCell m = meta[static_cast<std::size_t>(i)];
    m.diverged = r.run.diverged;
    m.steps = static_cast<int>(r.rows.size());
    m.final_loss = r.rows.empty() ? nan() : r.rows.back().next_loss;
    return m;
  });
  std::string csv = "norm,eta,steps,final_loss,diverged,dir\n";
  for (const auto& m : results)
    csv += m.norm + "," + format_double(m.eta) + "," + std::to_string(m.steps) + "," + format_double(m.final_loss) +
           "," + (m.diverged ? "1" : "0") + "," + m.dir.filename().string() + "\n";
  write_text(out / "sweep.csv", csv);
  return results;
}

// --- taylor switch ----------------------------------------------------------------

SwitchResult cmd_taylor_switch(const ExperimentConfig& cfg, const fs::path& out) {
  if (cfg.measurement.switch_steps.empty())
    throw Error(ErrorCode::kConfig, "key 'measurement.switch_steps': at least one switch step required");
  fs::create_directories(out);
  write_text(out / "config.yaml", serialize_config(cfg));
  const ObjectivePtr obj = build_objective(cfg);
  const OptimizerSpec spec = build_optimizer(cfg, *obj->layout());
  const int last = *std::max_element(cfg.measurement.switch_steps.begin(), cfg.measurement.switch_steps.end());
  if (last > cfg.optimizer.steps)
    throw Error(ErrorCode::kConfig, "key 'measurement.switch_steps': step " + std::to_string(last) +
                                        " beyond the trajectory length " + std::to_string(cfg.optimizer.steps));
  const RunResult traj = trajectory(cfg, *obj, std::max(last, 1));

  SwitchResult res;
  const int horizon = cfg.measurement.switch_horizon;
  for (int t0 : cfg.measurement.switch_steps) {
    if (static_cast<std::size_t>(t0) >= traj.iterates.size() ||
        (traj.diverged && static_cast<std::size_t>(t0) + 1 >= traj.iterates.size())) {
      res.exit_code = kExitDivergence;
      break;
    }
    SwitchCurves c = taylor_switch(obj, traj.iterates[static_cast<std::size_t>(t0)], t0, spec, horizon);
    std::string csv = "j,step,true_loss,taylor_loss\n";
    const std::size_t n = std::max(c.true_loss.size(), c.taylor_loss.size());
    std::vector<double> x, tl, ml;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = j < c.true_loss.size() ? c.true_loss[j] : nan();
      const double b = j < c.taylor_loss.size() ? c.taylor_loss[j] : nan();
      csv += std::to_string(j) + "," + std::to_string(t0 + static_cast<int>(j)) + "," + format_double(a) + "," +
             format_double(b) + "\n";
      x.push_back(t0 + static_cast<double>(j));
      tl.push_back(a);
      ml.push_back(b);
    }
    write_text(out / ("switch_" + std::to_string(t0) + ".csv"), csv);
    if (wants(cfg, "svg")) {
      std::vector<double> px, pl;
      for (int t = 0; t <= t0 && static_cast<std::size_t>(t) < traj.records.size(); ++t) {
        px.push_back(t);
        pl.push_back(traj.records[static_cast<std::size_t>(t)].loss_before);
      }
      Series before{"trajectory", px, pl, "#7f7f7f"};
      Series model{"quadratic model", x, ml, "#d62728", true};
      Panel p{"switch at step " + std::to_string(t0), "step", "loss", true,
              {before, {"true objective", x, tl, "#1f77b4"}, model}, static_cast<double>(t0)};
      write_svg(out / ("switch_" + std::to_string(t0) + ".svg"), {p}, 1);
    }
    res.curves.push_back(std::move(c));
  }
  return res;
}

// --- track direction --------------------------------------------------------------

TrackResult cmd_track_direction(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_text(out / "config.yaml", serialize_config(cfg));
  const ObjectivePtr obj = build_objective(cfg);
  const OptimizerSpec spec = build_optimizer(cfg, *obj->layout());
  const RunOptions ropt = build_run_options(cfg);
  const int t0 = cfg.measurement.track.t0, m = cfg.measurement.track.horizon;
  const RunResult traj = trajectory(cfg, *obj, t0 + m);

  TrackResult res;
  res.threshold = 2.0 / cfg.optimizer.eta;
  if (traj.diverged || traj.iterates.size() < static_cast<std::size_t>(t0 + m + 1)) {
    res.exit_code = kExitDivergence;
    return res;
  }
  auto sharpness_at = [&](int t) {
    const ParamVector& w = traj.iterates[static_cast<std::size_t>(t)];
    FwConfig fw = ropt.fw;
    fw.seed = ropt.fw.seed + static_cast<std::uint64_t>(t);
    // RMSprop runs measure in the preconditioner of the step taken at t.
    const NormSpec geom = spec.stepper == StepperKind::kRmsprop
                              ? step_geometry(spec, traj.records[static_cast<std::size_t>(std::min<std::size_t>(
                                                        static_cast<std::size_t>(t), traj.records.size() - 1))])
                              : spec.norm;
    return estimate_sharpness([&](const ParamVector& d) { return obj->hvp(w, d); }, w.layout(), geom,
                              ropt.sharpness_method, fw, ropt.power);
  };
  const SharpnessEstimate at_t0 = sharpness_at(t0);
  res.sharpness_t0 = at_t0.value;
  res.direction = at_t0.direction;
  save_param(res.direction, out / "direction");

  double sum = 0;
  for (int j = 1; j <= m; ++j) {
    TrackRow r;
    r.j = j;
    r.curvature = directional_curvature(*obj, traj.iterates[static_cast<std::size_t>(t0 + j)], res.direction);
    sum += r.curvature;
    r.running_mean = sum / j;
    r.sharpness = sharpness_at(t0 + j).value;
    res.rows.push_back(r);
  }

  std::string csv = "j,step,curvature,running_mean,sharpness\n";
  std::vector<double> x, c, rm, s;
  for (const auto& r : res.rows) {
    csv += std::to_string(r.j) + "," + std::to_string(t0 + r.j) + "," + format_double(r.curvature) + "," +
           format_double(r.running_mean) + "," + format_double(r.sharpness) + "\n";
    x.push_back(t0 + r.j);
    c.push_back(r.curvature);
    rm.push_back(r.running_mean);
    s.push_back(r.sharpness);
  }
  write_text(out / "track.csv", csv);
  if (wants(cfg, "svg")) {
    Panel p{"fixed-direction curvature from step " + std::to_string(t0), "step", "curvature", false,
            {{"dhat^T H dhat", x, c, "#1f77b4"},
             {"running mean", x, rm, "#ff7f0e"},
             {"generalized sharpness", x, s, "#2ca02c"},
             hline("2/eta", res.threshold, x.front(), x.back())},
            {}};
    write_svg(out / "track.svg", {p}, 1);
  }
  return res;
}

// --- oracle check -----------------------------------------------------------------

OracleCheckResult cmd_oracle_check(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_text(out / "config.yaml", serialize_config(cfg));
  const auto& oc = cfg.oracle_check;
  OracleCheckResult res;
  res.geometry = oc.geometry;
  const Index d = oc.dim;
  const LayoutPtr layout = BlockLayout::flat(d);

  NormSpec norm = NormSpec::euclidean();
  std::vector<Index> blocks;
  if (oc.geometry == "linf") {
    if (d > 22) {
      res.skipped = true;
      res.note = "enumeration oracle limited to d <= 22";
    }
    norm = NormSpec::linf();
    res.band = 0.02;
    res.required_within = (oc.seeds * 95 + 99) / 100;
  } else if (oc.geometry == "block_l12") {
    const Index base = d / oc.block_count;
    for (int b = 0; b < oc.block_count; ++b) blocks.push_back(b + 1 < oc.block_count ? base : d - base * b);
    if (base < 1) throw Error(ErrorCode::kConfig, "key 'oracle_check.block_count': more blocks than coordinates");
    norm = NormSpec::block_l12(blocks);
    res.band = 0.01;
    res.required_within = oc.seeds;
  } else {
    res.band = 1e-6;
    res.required_within = oc.seeds;
  }
  if (res.skipped) {
    write_text(out / "oracle_check.txt", "skipped: " + res.note + "\n");
    res.passed = true;
    return res;
  }

  // Instances and exact oracle values.
  std::vector<Matrix> hs;
  std::vector<double> truth;
  for (int s = 0; s < oc.seeds; ++s) {
    RngState rng = RngState(cfg.seed).fork(static_cast<std::uint64_t>(s));
    Matrix a = gaussian_matrix(d, d, rng);
    Matrix h;
    if (oc.geometry == "block_l12") {
      h = a * a.transpose() / static_cast<double>(d);  // PSD
    } else {
      h = a.triangularView<Eigen::Upper>();
      h.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
    }
    double t = 0;
    if (oc.geometry == "linf") {
      t = sharpness_bruteforce_linf(h).value;
    } else if (oc.geometry == "block_l12") {
      t = -std::numeric_limits<double>::infinity();
      Index off = 0;
      for (Index b : blocks) {
        const Eigen::SelfAdjointEigenSolver<Matrix> es(h.block(off, off, b, b), Eigen::EigenvaluesOnly);
        t = std::max(t, es.eigenvalues()[b - 1]);
        off += b;
      }
    } else {
      t = Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues()[d - 1];
    }
    hs.push_back(std::move(h));
    truth.push_back(t);
  }

  std::string csv = "restarts,iterations,seed,oracle,estimate,rel_error\n";
  for (int m : oc.restarts)
    for (int k : oc.iterations) {
      OracleCell cell;
      cell.restarts = m;
      cell.iterations = k;
      const auto est = parallel_map(oc.seeds, cfg.threads, [&](int s) {
        FwConfig fw;
        fw.iterations = k;
        fw.restarts = m;
        fw.seed = cfg.measurement.fw_seed + static_cast<std::uint64_t>(s);
        return sharpness_fw(matrix_hvp(hs[static_cast<std::size_t>(s)], layout), layout, norm, fw).value;
      });
      for (int s = 0; s < oc.seeds; ++s) {
        const double t = truth[static_cast<std::size_t>(s)], e = est[static_cast<std::size_t>(s)];
        const double rel = (t - e) / std::max(std::abs(t), 1e-300);
        cell.rel_error.push_back(rel);
        cell.mean_error += std::abs(rel) / oc.seeds;
        if (std::abs(rel) <= res.band) ++cell.within_band;
        if (e > t + 1e-8 * std::max(1.0, std::abs(t))) ++cell.above_oracle;
        csv += std::to_string(m) + "," + std::to_string(k) + "," + std::to_string(s) + "," + format_double(t) + "," +
               format_double(e) + "," + format_double(rel) + "\n";
      }
      res.cells.push_back(std::move(cell));
    }
  write_text(out / "oracle_check.csv", csv);

  const auto acceptance = std::max_element(res.cells.begin(), res.cells.end(), [](const auto& a, const auto& b) {
    return std::pair(a.restarts, a.iterations) < std::pair(b.restarts, b.iterations);
  });
  res.passed = acceptance != res.cells.end() && acceptance->within_band >= res.required_within &&
               acceptance->above_oracle == 0;
  if (!res.passed) res.exit_code = kExitOracle;

  std::string summary = "geometry " + oc.geometry + ", d = " + std::to_string(d) + ", " + std::to_string(oc.seeds) +
                        " seeds, band " + format_double(res.band) + "\n";
  summary += "restarts iterations mean_rel_error within_band above_oracle\n";
  for (const auto& c : res.cells)
    summary += std::to_string(c.restarts) + " " + std::to_string(c.iterations) + " " + format_double(c.mean_error) +
               " " + std::to_string(c.within_band) + " " + std::to_string(c.above_oracle) + "\n";
  summary += std::string("acceptance cell: ") + (res.passed ? "pass" : "FAIL") + "\n";
  write_text(out / "oracle_check.txt", summary);
  return res;
}

}  // namespace neos::harness
