#pragma once

// Dataset ingestion: CIFAR-10 binary batches and synthetic generators.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "neos/param.hpp"

namespace neos {

struct Dataset {
  Matrix inputs;   // n x p
  Matrix targets;  // n x q
  std::string source;
  std::string normalization;
  std::uint64_t subset_seed = 0;
  bool classification = false;

  Index size() const { return inputs.rows(); }
  Index input_dim() const { return inputs.cols(); }
  Index output_dim() const { return targets.cols(); }
};

/// Throws kFormat when the dataset violates its invariants (non-finite
/// values, empty, row mismatch, malformed one-hot rows).
void validate_dataset(const Dataset& data);

// --- CIFAR-10 -------------------------------------------------------------

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarImageBytes = 3072;
inline constexpr int kCifarClasses = 10;

struct CifarRecord {
  std::uint8_t label = 0;
  std::vector<std::uint8_t> pixels;  // channel-planar, 3 x 32 x 32
};

/// Every record of one batch file. Throws kFormat if the size is not a
/// multiple of 3073 bytes or a label byte exceeds 9.
std::vector<CifarRecord> read_cifar_batch(const std::filesystem::path& file);

/// Batch files found under `path` (a directory with data_batch_*.bin /
/// test_batch.bin, or a single file), in lexicographic order.
std::vector<std::filesystem::path> cifar_batch_files(const std::filesystem::path& path);

/// Class-balanced subset: the first n_per_class occurrences of each class
/// after a seeded shuffle. Pixels are scaled to [0, 1] then standardized per
/// channel over the subset; labels are one-hot (q = 10).
Dataset load_cifar10_subset(const std::filesystem::path& path, int n_per_class, std::uint64_t seed);

/// Writes records in the standard batch layout (used to build fixtures).
void write_cifar_batch(const std::filesystem::path& file, const std::vector<CifarRecord>& records);

// --- synthetic --------------------------------------------------------------

enum class SyntheticKind { kTeacherMlp, kRandomRegression, kTwoGaussians };

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::kTeacherMlp;
  Index n = 500;
  Index p = 16;
  Index q = 4;
  std::uint64_t seed = 0;
  double noise = 0.0;        // RandomRegression only
  double separation = 10.0;  // TwoGaussians: distance between means in units of sigma
  Index teacher_width = 32;  // TeacherMlp hidden width
};

Dataset gen_synthetic(const SyntheticOptions& options);

// --- binary matrices ----------------------------------------------------------
// Layout: int64 rows, int64 cols (little endian), then rows*cols float64
// values in row-major order.

void save_matrix(const std::filesystem::path& file, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& file);

/// Dataset cache: inputs then targets, each in the binary matrix layout.
void save_dataset(const std::filesystem::path& file, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& file);

}  // namespace neos
