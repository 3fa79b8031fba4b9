#include "neos/harness/runlog.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace neos::harness {

namespace {

const char* mode_name(StepMode m) { return m == StepMode::kNormalized ? "normalized" : "unnormalized"; }

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

double derived_threshold(StepMode mode, double eta, double dual) {
  return mode == StepMode::kNormalized ? 2.0 * dual / eta : 2.0 / eta;
}

std::optional<double> normalized(StepMode mode, const std::optional<double>& v, double dual) {
  if (!v) return std::nullopt;
  if (mode == StepMode::kUnnormalized) return v;
  if (!(dual > 0.0)) return std::nullopt;
  return *v / dual;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

bool same(const std::optional<double>& a, const std::optional<double>& b, double rel) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (std::isnan(*a) || std::isnan(*b)) return std::isnan(*a) && std::isnan(*b);
  return std::abs(*a - *b) <= rel * std::max(std::abs(*a), std::abs(*b));
}

}  // namespace

RunLogRow make_row(const StepRecord& rec) {
  RunLogRow r;
  r.step = rec.step;
  r.loss = rec.loss_before;
  r.next_loss = rec.loss_after;
  r.dual_grad_norm = rec.dual_grad_norm;
  r.dir_smoothness = rec.dir_smoothness;
  r.sharpness = rec.sharpness;
  r.fw_gap = rec.fw_gap;
  r.threshold = derived_threshold(rec.mode, rec.eta, rec.dual_grad_norm);
  r.normalized_dir_smoothness = normalized(rec.mode, rec.dir_smoothness, rec.dual_grad_norm);
  r.normalized_sharpness = normalized(rec.mode, rec.sharpness, rec.dual_grad_norm);
  r.diverged = rec.diverged;
  return r;
}

std::vector<std::string> csv_columns() {
  return {"step",      "loss",   "next_loss", "dual_grad_norm",           "dir_smoothness",      "sharpness",
          "fw_gap",    "threshold", "normalized_dir_smoothness", "normalized_sharpness", "diverged"};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_line(const RunLogRow& r) {
  std::ostringstream s;
  s << r.step << ',' << format_double(r.loss) << ',' << format_double(r.next_loss) << ','
    << format_double(r.dual_grad_norm) << ',' << opt_field(r.dir_smoothness) << ',' << opt_field(r.sharpness) << ','
    << opt_field(r.fw_gap) << ',' << format_double(r.threshold) << ',' << opt_field(r.normalized_dir_smoothness)
    << ',' << opt_field(r.normalized_sharpness) << ',' << (r.diverged ? 1 : 0);
  return s.str();
}

std::string jsonl_line(const RunLogRow& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["loss"] = r.loss;
  j["next_loss"] = r.next_loss;
  j["dual_grad_norm"] = r.dual_grad_norm;
  j["dir_smoothness"] = opt_json(r.dir_smoothness);
  j["sharpness"] = opt_json(r.sharpness);
  j["fw_gap"] = opt_json(r.fw_gap);
  j["threshold"] = r.threshold;
  j["normalized_dir_smoothness"] = opt_json(r.normalized_dir_smoothness);
  j["normalized_sharpness"] = opt_json(r.normalized_sharpness);
  j["diverged"] = r.diverged;
  // Non-finite losses are not representable in JSON; they become null.
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

RunLogWriter::RunLogWriter(const std::filesystem::path& dir, const RunLogMeta& meta, bool csv, bool jsonl) {
  std::filesystem::create_directories(dir);
  if (csv) {
    csv_.open(dir / "run.csv", std::ios::binary | std::ios::trunc);
    if (!csv_) throw Error(ErrorCode::kIo, "cannot write " + (dir / "run.csv").string());
    csv_ << "# schema=" << meta.schema << " mode=" << mode_name(meta.mode) << " eta=" << format_double(meta.eta)
         << '\n';
    const auto cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) csv_ << (i ? "," : "") << cols[i];
    csv_ << '\n' << std::flush;
  }
  if (jsonl) {
    jsonl_.open(dir / "run.jsonl", std::ios::binary | std::ios::trunc);
    if (!jsonl_) throw Error(ErrorCode::kIo, "cannot write " + (dir / "run.jsonl").string());
  }
}

void RunLogWriter::append(const RunLogRow& row) {
  if (csv_.is_open()) csv_ << csv_line(row) << '\n' << std::flush;
  if (jsonl_.is_open()) jsonl_ << jsonl_line(row) << '\n' << std::flush;
}

RunLog read_run_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + file.string());
  RunLog log;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw Error(ErrorCode::kFormat, "missing metadata line");
  {
    std::istringstream meta(line.substr(2));
    std::string kv;
    bool have_mode = false, have_eta = false;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "schema") log.meta.schema = v;
      if (k == "mode") {
        if (v != "normalized" && v != "unnormalized") throw Error(ErrorCode::kFormat, "bad mode " + v);
        log.meta.mode = v == "normalized" ? StepMode::kNormalized : StepMode::kUnnormalized;
        have_mode = true;
      }
      if (k == "eta") {
        log.meta.eta = std::stod(v);
        have_eta = true;
      }
    }
    if (log.meta.schema != kRunLogSchema) throw Error(ErrorCode::kFormat, "unknown schema " + log.meta.schema);
    if (!have_mode || !have_eta) throw Error(ErrorCode::kFormat, "metadata needs mode and eta");
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "missing header");
  {
    std::string expected;
    for (const auto& c : csv_columns()) expected += (expected.empty() ? "" : ",") + c;
    if (line != expected) throw Error(ErrorCode::kFormat, "unexpected header: " + line);
  }
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != csv_columns().size())
      throw Error(ErrorCode::kFormat, "line " + std::to_string(lineno) + ": wrong field count");
    try {
      RunLogRow r;
      r.step = std::stoi(f[0]);
      r.loss = std::stod(f[1]);
      r.next_loss = std::stod(f[2]);
      r.dual_grad_norm = std::stod(f[3]);
      r.dir_smoothness = parse_opt(f[4]);
      r.sharpness = parse_opt(f[5]);
      r.fw_gap = parse_opt(f[6]);
      r.threshold = std::stod(f[7]);
      r.normalized_dir_smoothness = parse_opt(f[8]);
      r.normalized_sharpness = parse_opt(f[9]);
      r.diverged = f[10] == "1";
      log.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(lineno) + ": unparsable field");
    }
  }
  return log;
}

ValidationReport validate_run_log(const RunLog& log, double min_dual) {
  ValidationReport rep;
  const StepMode mode = log.meta.mode;
  const double eta = log.meta.eta;
  auto flag = [&](const RunLogRow& r, const std::string& what) {
    ++rep.mismatches;
    if (rep.problems.size() < 10) rep.problems.push_back("step " + std::to_string(r.step) + ": " + what);
  };
  for (const auto& r : log.rows) {
    ++rep.rows;
    const double thr = derived_threshold(mode, eta, r.dual_grad_norm);
    if (!same(thr, r.threshold, 1e-15)) flag(r, "threshold " + format_double(r.threshold) + " != " + format_double(thr));
    if (!same(normalized(mode, r.dir_smoothness, r.dual_grad_norm), r.normalized_dir_smoothness, 1e-15))
      flag(r, "normalized_dir_smoothness");
    if (!same(normalized(mode, r.sharpness, r.dual_grad_norm), r.normalized_sharpness, 1e-15))
      flag(r, "normalized_sharpness");
    if (r.sharpness.has_value() != r.fw_gap.has_value()) flag(r, "sharpness and fw_gap must appear together");

    if (r.diverged || !r.dir_smoothness || !(r.dual_grad_norm > min_dual)) continue;
    const double dl = r.next_loss - r.loss;
    const double gap = *r.dir_smoothness - thr;
    const double scale = mode == StepMode::kNormalized ? eta * r.dual_grad_norm
                                                       : eta * r.dual_grad_norm * r.dual_grad_norm;
    ++rep.checked_signs;
    if (std::abs(gap) <= 1e-9 * thr) {
      if (std::abs(dl) > 2e-9 * scale) flag(r, "near-tie in D but Delta L = " + format_double(dl));
    } else if ((dl > 0) != (gap > 0) || dl == 0.0) {
      flag(r, "sign(Delta L) = sign(" + format_double(dl) + ") but D - threshold = " + format_double(gap));
    }
  }
  return rep;
}

}  // namespace neos::harness
