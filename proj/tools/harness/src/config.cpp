#include "neos/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "neos/data_io.hpp"

namespace neos::harness {

namespace {

[[noreturn]] void fail(const std::string& key, const YAML::Node& node, const std::string& what) {
  std::string where;
  if (node.IsDefined() && node.Mark().line >= 0) where = " (line " + std::to_string(node.Mark().line + 1) + ")";
  throw Error(ErrorCode::kConfig, "key '" + key + "'" + where + ": " + what);
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key, const char* expected) {
  if (!node.IsScalar()) fail(key, node, std::string("expected ") + expected);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, node, std::string("expected ") + expected + ", got '" + node.Scalar() + "'");
  }
}

void read(const YAML::Node& n, const std::string& k, double& out) { out = scalar<double>(n, k, "a number"); }
void read(const YAML::Node& n, const std::string& k, int& out) { out = scalar<int>(n, k, "an integer"); }
void read(const YAML::Node& n, const std::string& k, long& out) { out = scalar<long>(n, k, "an integer"); }
void read(const YAML::Node& n, const std::string& k, std::uint64_t& out) {
  out = scalar<std::uint64_t>(n, k, "a non-negative integer");
}
void read(const YAML::Node& n, const std::string& k, bool& out) { out = scalar<bool>(n, k, "true or false"); }
void read(const YAML::Node& n, const std::string& k, std::string& out) { out = scalar<std::string>(n, k, "a string"); }

template <class T, std::size_t N>
void read(const YAML::Node& n, const std::string& k, std::array<T, N>& out);

template <class T>
void read(const YAML::Node& n, const std::string& k, std::vector<T>& out) {
  if (!n.IsSequence()) fail(k, n, "expected a list");
  out.clear();
  for (std::size_t i = 0; i < n.size(); ++i) {
    T v{};
    read(n[i], k + "[" + std::to_string(i) + "]", v);
    out.push_back(std::move(v));
  }
}

template <class T, std::size_t N>
void read(const YAML::Node& n, const std::string& k, std::array<T, N>& out) {
  if (!n.IsSequence() || n.size() != N) fail(k, n, "expected a list of " + std::to_string(N) + " values");
  for (std::size_t i = 0; i < N; ++i) read(n[i], k + "[" + std::to_string(i) + "]", out[i]);
}

// One mapping in the document. Every key must be consumed by get/section
// before finish(); leftovers are reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) fail(path_, node_, "expected a mapping");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!node_.IsMap()) return;
    const YAML::Node v = node_[key];
    if (v.IsDefined() && !v.IsNull()) read(v, join(key), out);
  }

  Section section(const std::string& key) {
    known_.insert(key);
    return Section(node_.IsMap() ? node_[key] : YAML::Node(), join(key));
  }

  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!known_.count(key)) fail(join(key), kv.first, "unknown key");
    }
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> known_;
};

void parse_polar(Section s, PolarSpec& p) {
  s.get("method", p.method);
  s.get("steps", p.steps);
  s.get("schedule", p.schedule);
  s.finish();
}

void parse_norm(Section s, NormConfig& n) {
  s.get("kind", n.kind);
  s.get("preconditioner", n.preconditioner);
  s.get("blocks", n.blocks);
  s.get("shapes", n.shapes);
  parse_polar(s.section("polar"), n.polar);
  s.finish();
}

void parse_objective(Section s, ObjectiveSpec& o) {
  s.get("kind", o.kind);
  {
    Section q = s.section("quadratic");
    q.get("diag", o.quadratic.diag);
    q.get("matrix", o.quadratic.matrix);
    q.get("random_dim", o.quadratic.random_dim);
    q.get("random_cond", o.quadratic.random_cond);
    q.get("random_seed", o.quadratic.random_seed);
    q.finish();
  }
  s.get("hidden", o.hidden);
  s.get("activation", o.activation);
  {
    Section d = s.section("dataset");
    d.get("kind", o.dataset.kind);
    d.get("generator", o.dataset.generator);
    d.get("n", o.dataset.n);
    d.get("p", o.dataset.p);
    d.get("q", o.dataset.q);
    d.get("noise", o.dataset.noise);
    d.get("path", o.dataset.path);
    d.get("per_class", o.dataset.per_class);
    d.get("seed", o.dataset.seed);
    d.finish();
  }
  s.finish();
}

void parse_optimizer(Section s, OptimizerConfig& o) {
  s.get("mode", o.mode);
  s.get("stepper", o.stepper);
  parse_norm(s.section("norm"), o.norm);
  s.get("eta", o.eta);
  s.get("steps", o.steps);
  s.get("beta2", o.beta2);
  s.get("epsilon", o.epsilon);
  s.finish();
}

void parse_measurement(Section s, MeasurementConfig& m) {
  s.get("fw_iterations", m.fw_iterations);
  s.get("fw_restarts", m.fw_restarts);
  s.get("fw_seed", m.fw_seed);
  s.get("cadence", m.cadence);
  s.get("sharpness", m.sharpness);
  {
    Section t = s.section("track");
    t.get("enabled", m.track.enabled);
    t.get("t0", m.track.t0);
    t.get("horizon", m.track.horizon);
    t.finish();
  }
  s.get("switch_steps", m.switch_steps);
  s.get("switch_horizon", m.switch_horizon);
  s.finish();
}

void parse_rest(Section& root, ExperimentConfig& c) {
  {
    Section q = root.section("quad");
    q.get("eta_over_s", c.quad.eta_over_s);
    q.get("etas", c.quad.etas);
    q.get("t_max", c.quad.t_max);
    q.get("bisect", c.quad.bisect);
    q.finish();
  }
  {
    Section w = root.section("sweep");
    w.get("etas", c.sweep.etas);
    w.get("norms", c.sweep.norms);
    w.finish();
  }
  {
    Section o = root.section("oracle_check");
    o.get("geometry", c.oracle_check.geometry);
    o.get("dim", c.oracle_check.dim);
    o.get("block_count", c.oracle_check.block_count);
    o.get("seeds", c.oracle_check.seeds);
    o.get("restarts", c.oracle_check.restarts);
    o.get("iterations", c.oracle_check.iterations);
    o.finish();
  }
  {
    Section o = root.section("output");
    o.get("directory", c.output.directory);
    o.get("formats", c.output.formats);
    o.get("smoothing", c.output.smoothing);
    o.finish();
  }
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kConfig, "key '" + key + "': " + what);
}

// --- serialization -----------------------------------------------------------

// Shortest text that parses back to the same double.
struct Num {
  double v;
};

YAML::Emitter& operator<<(YAML::Emitter& e, Num n) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, n.v);
  std::string text(buf, r.ptr);
  if (text.find_first_of(".eEn") == std::string::npos) text += ".0";  // keep it a float
  return e << text;
}

template <class T>
auto emitted(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    return Num{x};
  } else {
    return x;
  }
}

template <class T>
void emit_list(YAML::Emitter& e, const std::vector<T>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : v) e << emitted(x);
  e << YAML::EndSeq;
}

template <class T, std::size_t N>
void emit_list(YAML::Emitter& e, const std::vector<std::array<T, N>>& v) {
  e << YAML::BeginSeq;
  for (const auto& row : v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (const auto& x : row) e << emitted(x);
    e << YAML::EndSeq;
  }
  e << YAML::EndSeq;
}

void emit_list(YAML::Emitter& e, const std::vector<std::vector<double>>& v) {
  e << YAML::BeginSeq;
  for (const auto& row : v) emit_list(e, row);
  e << YAML::EndSeq;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& ex) {
    throw Error(ErrorCode::kConfig, "line " + std::to_string(ex.mark.line + 1) + ": " + ex.msg);
  }
  ExperimentConfig c;
  Section root(doc, "");
  root.get("version", c.version);
  if (c.version != kConfigVersion)
    fail("version", doc["version"], "unsupported config version " + std::to_string(c.version));
  root.get("name", c.name);
  root.get("seed", c.seed);
  root.get("threads", c.threads);
  parse_objective(root.section("objective"), c.objective);
  parse_optimizer(root.section("optimizer"), c.optimizer);
  parse_measurement(root.section("measurement"), c.measurement);
  parse_rest(root, c);
  root.finish();
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "version" << YAML::Value << c.version;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "threads" << YAML::Value << c.threads;

  const auto& o = c.objective;
  e << YAML::Key << "objective" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << o.kind;
  e << YAML::Key << "quadratic" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "diag" << YAML::Value;
  emit_list(e, o.quadratic.diag);
  e << YAML::Key << "matrix" << YAML::Value;
  emit_list(e, o.quadratic.matrix);
  e << YAML::Key << "random_dim" << YAML::Value << o.quadratic.random_dim;
  e << YAML::Key << "random_cond" << YAML::Value << Num{o.quadratic.random_cond};
  e << YAML::Key << "random_seed" << YAML::Value << o.quadratic.random_seed;
  e << YAML::EndMap;
  e << YAML::Key << "hidden" << YAML::Value;
  emit_list(e, o.hidden);
  e << YAML::Key << "activation" << YAML::Value << o.activation;
  e << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << o.dataset.kind;
  e << YAML::Key << "generator" << YAML::Value << o.dataset.generator;
  e << YAML::Key << "n" << YAML::Value << o.dataset.n;
  e << YAML::Key << "p" << YAML::Value << o.dataset.p;
  e << YAML::Key << "q" << YAML::Value << o.dataset.q;
  e << YAML::Key << "noise" << YAML::Value << Num{o.dataset.noise};
  e << YAML::Key << "path" << YAML::Value << YAML::DoubleQuoted << o.dataset.path;
  e << YAML::Key << "per_class" << YAML::Value << o.dataset.per_class;
  e << YAML::Key << "seed" << YAML::Value << o.dataset.seed;
  e << YAML::EndMap << YAML::EndMap;

  const auto& op = c.optimizer;
  e << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << op.mode;
  e << YAML::Key << "stepper" << YAML::Value << op.stepper;
  e << YAML::Key << "norm" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << op.norm.kind;
  e << YAML::Key << "preconditioner" << YAML::Value;
  emit_list(e, op.norm.preconditioner);
  e << YAML::Key << "blocks" << YAML::Value;
  emit_list(e, op.norm.blocks);
  e << YAML::Key << "shapes" << YAML::Value;
  emit_list(e, op.norm.shapes);
  e << YAML::Key << "polar" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "method" << YAML::Value << op.norm.polar.method;
  e << YAML::Key << "steps" << YAML::Value << op.norm.polar.steps;
  e << YAML::Key << "schedule" << YAML::Value;
  emit_list(e, op.norm.polar.schedule);
  e << YAML::EndMap << YAML::EndMap;
  e << YAML::Key << "eta" << YAML::Value << Num{op.eta};
  e << YAML::Key << "steps" << YAML::Value << op.steps;
  e << YAML::Key << "beta2" << YAML::Value << Num{op.beta2};
  e << YAML::Key << "epsilon" << YAML::Value << Num{op.epsilon};
  e << YAML::EndMap;

  const auto& m = c.measurement;
  e << YAML::Key << "measurement" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "fw_iterations" << YAML::Value << m.fw_iterations;
  e << YAML::Key << "fw_restarts" << YAML::Value << m.fw_restarts;
  e << YAML::Key << "fw_seed" << YAML::Value << m.fw_seed;
  e << YAML::Key << "cadence" << YAML::Value << m.cadence;
  e << YAML::Key << "sharpness" << YAML::Value << m.sharpness;
  e << YAML::Key << "track" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "enabled" << YAML::Value << m.track.enabled;
  e << YAML::Key << "t0" << YAML::Value << m.track.t0;
  e << YAML::Key << "horizon" << YAML::Value << m.track.horizon;
  e << YAML::EndMap;
  e << YAML::Key << "switch_steps" << YAML::Value;
  emit_list(e, m.switch_steps);
  e << YAML::Key << "switch_horizon" << YAML::Value << m.switch_horizon;
  e << YAML::EndMap;

  e << YAML::Key << "quad" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "eta_over_s" << YAML::Value;
  emit_list(e, c.quad.eta_over_s);
  e << YAML::Key << "etas" << YAML::Value;
  emit_list(e, c.quad.etas);
  e << YAML::Key << "t_max" << YAML::Value << c.quad.t_max;
  e << YAML::Key << "bisect" << YAML::Value << c.quad.bisect;
  e << YAML::EndMap;

  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "etas" << YAML::Value;
  emit_list(e, c.sweep.etas);
  e << YAML::Key << "norms" << YAML::Value;
  emit_list(e, c.sweep.norms);
  e << YAML::EndMap;

  const auto& oc = c.oracle_check;
  e << YAML::Key << "oracle_check" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "geometry" << YAML::Value << oc.geometry;
  e << YAML::Key << "dim" << YAML::Value << oc.dim;
  e << YAML::Key << "block_count" << YAML::Value << oc.block_count;
  e << YAML::Key << "seeds" << YAML::Value << oc.seeds;
  e << YAML::Key << "restarts" << YAML::Value;
  emit_list(e, oc.restarts);
  e << YAML::Key << "iterations" << YAML::Value;
  emit_list(e, oc.iterations);
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "directory" << YAML::Value << YAML::DoubleQuoted << c.output.directory;
  e << YAML::Key << "formats" << YAML::Value;
  emit_list(e, c.output.formats);
  e << YAML::Key << "smoothing" << YAML::Value << Num{c.output.smoothing};
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  require(c.threads >= 1, "threads", "must be >= 1");
  const auto& o = c.objective;
  require(one_of(o.kind, {"quadratic", "mlp"}), "objective.kind", "expected quadratic or mlp");
  if (o.kind == "quadratic") {
    const int given = !o.quadratic.diag.empty() + !o.quadratic.matrix.empty() + (o.quadratic.random_dim > 0);
    require(given == 1, "objective.quadratic", "give exactly one of diag, matrix, random_dim");
    require(o.quadratic.random_cond >= 1.0, "objective.quadratic.random_cond", "must be >= 1");
    for (const auto& row : o.quadratic.matrix)
      require(row.size() == o.quadratic.matrix.size(), "objective.quadratic.matrix", "must be square");
  } else {
    require(one_of(o.activation, {"tanh", "relu"}), "objective.activation", "expected tanh or relu");
    for (Index h : o.hidden) require(h >= 1, "objective.hidden", "widths must be positive");
    require(one_of(o.dataset.kind, {"synthetic", "cifar", "file"}), "objective.dataset.kind",
            "expected synthetic, cifar or file");
    require(one_of(o.dataset.generator, {"teacher_mlp", "random_regression", "two_gaussians"}),
            "objective.dataset.generator", "expected teacher_mlp, random_regression or two_gaussians");
    require(o.dataset.n >= 1 && o.dataset.p >= 1 && o.dataset.q >= 1, "objective.dataset", "n, p, q must be >= 1");
    require(o.dataset.kind == "synthetic" || !o.dataset.path.empty(), "objective.dataset.path", "required");
    require(o.dataset.per_class >= 1, "objective.dataset.per_class", "must be >= 1");
  }
  const auto& op = c.optimizer;
  require(one_of(op.mode, {"unnormalized", "normalized"}), "optimizer.mode", "expected unnormalized or normalized");
  require(one_of(op.stepper, {"generic", "block_cd", "spectral", "rmsprop"}), "optimizer.stepper",
          "expected generic, block_cd, spectral or rmsprop");
  require(one_of(op.norm.kind, {"l2", "preconditioned", "linf", "block_l12", "spectral_max", "spectral_sum"}),
          "optimizer.norm.kind", "unknown norm");
  require(one_of(op.norm.polar.method, {"exact", "newton_schulz", "polar_express"}), "optimizer.norm.polar.method",
          "expected exact, newton_schulz or polar_express");
  require(op.norm.polar.steps >= 1, "optimizer.norm.polar.steps", "must be >= 1");
  require(op.eta > 0.0, "optimizer.eta", "must be positive");
  require(op.steps >= 1, "optimizer.steps", "must be >= 1");
  require(op.beta2 >= 0.0 && op.beta2 < 1.0, "optimizer.beta2", "must lie in [0, 1)");
  require(op.epsilon > 0.0, "optimizer.epsilon", "must be positive");
  const auto& m = c.measurement;
  require(m.fw_iterations >= 1 && m.fw_restarts >= 1, "measurement", "fw_iterations and fw_restarts must be >= 1");
  require(m.cadence >= 0, "measurement.cadence", "must be >= 0");
  require(one_of(m.sharpness, {"auto", "frank_wolfe", "closed"}), "measurement.sharpness",
          "expected auto, frank_wolfe or closed");
  require(m.track.t0 >= 0 && m.track.horizon >= 1, "measurement.track", "t0 >= 0 and horizon >= 1");
  require(m.switch_horizon >= 1, "measurement.switch_horizon", "must be >= 1");
  for (int s : m.switch_steps) require(s >= 0, "measurement.switch_steps", "must be >= 0");
  require(c.quad.t_max >= 1, "quad.t_max", "must be >= 1");
  require(one_of(c.oracle_check.geometry, {"linf", "block_l12", "l2"}), "oracle_check.geometry",
          "expected linf, block_l12 or l2");
  require(c.oracle_check.dim >= 1 && c.oracle_check.seeds >= 1 && c.oracle_check.block_count >= 1, "oracle_check",
          "dim, seeds and block_count must be >= 1");
  for (const auto& f : c.output.formats)
    require(one_of(f, {"csv", "jsonl", "svg"}), "output.formats", "unknown format '" + f + "'");
  require(c.output.smoothing >= 0.0 && c.output.smoothing < 1.0, "output.smoothing", "must lie in [0, 1)");
}

// --- builders --------------------------------------------------------------------

Matrix build_quadratic_matrix(const ExperimentConfig& cfg) {
  const auto& q = cfg.objective.quadratic;
  if (cfg.objective.kind != "quadratic") throw Error(ErrorCode::kConfig, "objective is not quadratic");
  if (!q.diag.empty()) return Eigen::Map<const Vector>(q.diag.data(), static_cast<Index>(q.diag.size())).asDiagonal();
  if (!q.matrix.empty()) {
    const auto n = static_cast<Index>(q.matrix.size());
    Matrix h(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) h(i, j) = q.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return h;
  }
  RngState rng(q.random_seed);
  return random_pd(q.random_dim, q.random_cond, rng);
}

ObjectivePtr build_objective(const ExperimentConfig& cfg) {
  const auto& o = cfg.objective;
  if (o.kind == "quadratic") return std::make_shared<QuadraticObjective>(build_quadratic_matrix(cfg));

  Dataset data;
  const auto& d = o.dataset;
  if (d.kind == "synthetic") {
    SyntheticOptions s;
    s.kind = d.generator == "teacher_mlp"         ? SyntheticKind::kTeacherMlp
             : d.generator == "random_regression" ? SyntheticKind::kRandomRegression
                                                  : SyntheticKind::kTwoGaussians;
    s.n = d.n;
    s.p = d.p;
    s.q = d.q;
    s.noise = d.noise;
    s.seed = d.seed;
    data = gen_synthetic(s);
  } else if (d.kind == "cifar") {
    data = load_cifar10_subset(d.path, d.per_class, d.seed);
  } else {
    data = load_dataset(d.path);
  }
  std::vector<Index> widths{data.input_dim()};
  widths.insert(widths.end(), o.hidden.begin(), o.hidden.end());
  widths.push_back(data.output_dim());
  return std::make_shared<MlpObjective>(widths, o.activation == "tanh" ? Activation::kTanh : Activation::kRelu,
                                        std::move(data));
}

NormSpec build_norm(const NormConfig& n, const BlockLayout& layout) {
  PolarMethod polar;
  if (n.polar.method == "newton_schulz") polar = PolarMethod::newton_schulz(n.polar.steps);
  if (n.polar.method == "polar_express") {
    std::vector<PolarMethod::Triple> schedule(n.polar.schedule.begin(), n.polar.schedule.end());
    polar = PolarMethod::polar_express(n.polar.steps, std::move(schedule));
  }
  std::vector<std::pair<Index, Index>> shapes;
  for (const auto& s : n.shapes) shapes.emplace_back(s[0], s[1]);

  NormSpec spec;
  if (n.kind == "l2") spec = NormSpec::euclidean();
  if (n.kind == "linf") spec = NormSpec::linf();
  if (n.kind == "preconditioned") {
    if (n.preconditioner.empty()) throw Error(ErrorCode::kConfig, "key 'optimizer.norm.preconditioner': required");
    spec = NormSpec::preconditioned_diagonal(
        Eigen::Map<const Vector>(n.preconditioner.data(), static_cast<Index>(n.preconditioner.size())));
  }
  if (n.kind == "block_l12") spec = n.blocks.empty() ? NormSpec::block_l12(layout) : NormSpec::block_l12(n.blocks);
  if (n.kind == "spectral_max")
    spec = shapes.empty() ? NormSpec::spectral_max(layout, polar) : NormSpec::spectral_max(shapes, polar);
  if (n.kind == "spectral_sum")
    spec = shapes.empty() ? NormSpec::spectral_sum(layout, polar) : NormSpec::spectral_sum(shapes, polar);
  try {
    spec.check_dimension(layout.total_dim());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("key 'optimizer.norm': ") + e.what());
  }
  return spec;
}

OptimizerSpec build_optimizer(const ExperimentConfig& cfg, const BlockLayout& layout) {
  const auto& o = cfg.optimizer;
  OptimizerSpec spec;
  spec.mode = o.mode == "normalized" ? StepMode::kNormalized : StepMode::kUnnormalized;
  spec.norm = build_norm(o.norm, layout);
  spec.eta = o.eta;
  if (o.stepper == "block_cd") spec.stepper = StepperKind::kBlockCd;
  if (o.stepper == "spectral") spec.stepper = StepperKind::kSpectral;
  if (o.stepper == "rmsprop") {
    spec.stepper = StepperKind::kRmsprop;
    spec.rmsprop = RmspropSchedule{o.beta2, o.epsilon};
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("key 'optimizer': ") + e.what());
  }
  return spec;
}

RunOptions build_run_options(const ExperimentConfig& cfg) {
  const auto& m = cfg.measurement;
  RunOptions opt;
  opt.steps = cfg.optimizer.steps;
  opt.cadence = m.cadence;
  opt.sharpness_method = m.sharpness == "frank_wolfe" ? SharpnessMethod::kFrankWolfe
                         : m.sharpness == "closed"    ? SharpnessMethod::kClosed
                                                      : SharpnessMethod::kAuto;
  opt.fw.iterations = m.fw_iterations;
  opt.fw.restarts = m.fw_restarts;
  opt.fw.seed = m.fw_seed;
  opt.fw.threads = cfg.threads;
  opt.power.seed = m.fw_seed;
  return opt;
}

ParamVector initial_point(const Objective& obj, std::uint64_t seed) {
  RngState rng(seed);
  if (const auto* mlp = dynamic_cast<const MlpObjective*>(&obj)) return mlp->init(rng);
  return gaussian_like(obj.layout(), rng);
}

}  // namespace neos::harness
