#pragma once

// Per-step run log. CSV and JSONL carry the same rows; the CSV opens with a
// "# " metadata line (schema version, mode, eta) so the validator can
// re-derive every derived column from the raw ones.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "neos/optimizers.hpp"

namespace neos::harness {

inline constexpr const char* kRunLogSchema = "neos.runlog/1";

struct RunLogRow {
  int step = 0;
  double loss = 0.0;
  double next_loss = 0.0;  // loss after the step; carries the sign of Delta L
  double dual_grad_norm = 0.0;
  std::optional<double> dir_smoothness;
  std::optional<double> sharpness;  // empty between cadences
  std::optional<double> fw_gap;
  double threshold = 0.0;
  std::optional<double> normalized_dir_smoothness;
  std::optional<double> normalized_sharpness;
  bool diverged = false;
};

struct RunLogMeta {
  std::string schema = kRunLogSchema;
  StepMode mode = StepMode::kUnnormalized;
  double eta = 0.0;
};

/// Derived columns: threshold = 2/eta (unnormalized) or 2||g||_*/eta
/// (normalized); normalized_x = x (unnormalized) or x/||g||_* (normalized),
/// so every normalized column is compared against 2/eta.
RunLogRow make_row(const StepRecord& rec);

std::vector<std::string> csv_columns();
std::string format_double(double v);
std::string csv_line(const RunLogRow& row);
std::string jsonl_line(const RunLogRow& row);

/// Appends rows as they arrive and flushes each one, so a diverged or
/// interrupted run leaves a readable partial log.
class RunLogWriter {
 public:
  RunLogWriter(const std::filesystem::path& dir, const RunLogMeta& meta, bool csv, bool jsonl);
  void append(const RunLogRow& row);

 private:
  std::ofstream csv_;
  std::ofstream jsonl_;
};

struct RunLog {
  RunLogMeta meta;
  std::vector<RunLogRow> rows;
};

RunLog read_run_csv(const std::filesystem::path& file);

struct ValidationReport {
  int rows = 0;
  int checked_signs = 0;
  int mismatches = 0;
  std::vector<std::string> problems;  // first few mismatches
  bool ok() const { return mismatches == 0; }
};

/// Re-derives threshold, both normalized columns and the sign identity
/// sign(next_loss - loss) == sign(dir_smoothness - threshold) for rows with
/// ||g||_* > min_dual. Near-ties (|D - threshold| within 1e-9 relative) only
/// require |Delta L| to be correspondingly small.
ValidationReport validate_run_log(const RunLog& log, double min_dual = 1e-8);

}  // namespace neos::harness
