#include "neos/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

namespace neos {

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::kFormat, "unexpected end of file");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) write_u64(os, std::bit_cast<std::uint64_t>(m(i, j)));
}

Matrix read_matrix(std::istream& is) {
  const auto rows = static_cast<std::int64_t>(read_u64(is));
  const auto cols = static_cast<std::int64_t>(read_u64(is));
  if (rows < 0 || cols < 0 || rows > (1LL << 31) || cols > (1LL << 31))
    throw Error(ErrorCode::kFormat, "implausible matrix header");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = std::bit_cast<double>(read_u64(is));
  return m;
}

Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix t = Matrix::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Index>(i), labels[i]) = 1.0;
  return t;
}

Matrix tanh_teacher(const Matrix& x, Index width, Index q, RngState& rng) {
  const Matrix w1 = gaussian_matrix(width, x.cols(), rng) / std::sqrt(static_cast<double>(x.cols()));
  const Matrix w2 = gaussian_matrix(q, width, rng) / std::sqrt(static_cast<double>(width));
  const Matrix h = (x * w1.transpose()).array().tanh().matrix();
  return h * w2.transpose();
}

}  // namespace

void validate_dataset(const Dataset& data) {
  if (data.inputs.rows() < 1) throw Error(ErrorCode::kFormat, "dataset is empty");
  if (data.inputs.rows() != data.targets.rows()) throw Error(ErrorCode::kFormat, "inputs/targets row mismatch");
  if (!data.inputs.allFinite() || !data.targets.allFinite())
    throw Error(ErrorCode::kFormat, "dataset contains non-finite values");
  if (data.classification) {
    for (Index i = 0; i < data.targets.rows(); ++i) {
      const auto row = data.targets.row(i);
      const auto ones = (row.array() == 1.0).count();
      const auto zeros = (row.array() == 0.0).count();
      if (ones != 1 || ones + zeros != row.size())
        throw Error(ErrorCode::kFormat, "row " + std::to_string(i) + " is not one-hot");
    }
  }
}

std::vector<CifarRecord> read_cifar_batch(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.empty() || raw.size() % kCifarRecordBytes != 0)
    throw Error(ErrorCode::kFormat, file.string() + ": size " + std::to_string(raw.size()) +
                                        " is not a positive multiple of 3073");
  const std::size_t count = raw.size() / kCifarRecordBytes;
  std::vector<CifarRecord> records(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t base = k * kCifarRecordBytes;
    if (raw[base] > 9)
      throw Error(ErrorCode::kFormat, file.string() + ": record " + std::to_string(k) + " has label " +
                                          std::to_string(raw[base]) + " (corrupt batch)");
    records[k].label = raw[base];
    records[k].pixels.assign(raw.begin() + static_cast<std::ptrdiff_t>(base + 1),
                             raw.begin() + static_cast<std::ptrdiff_t>(base + kCifarRecordBytes));
  }
  return records;
}

void write_cifar_batch(const std::filesystem::path& file, const std::vector<CifarRecord>& records) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  for (const auto& r : records) {
    if (r.pixels.size() != kCifarImageBytes) throw Error(ErrorCode::kInvalidArgument, "record needs 3072 pixel bytes");
    out.put(static_cast<char>(r.label));
    out.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
  }
}

std::vector<std::filesystem::path> cifar_batch_files(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(path)) return {path};
  if (!fs::is_directory(path)) throw Error(ErrorCode::kIo, "no such CIFAR-10 path: " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && entry.path().extension() == ".bin" &&
        (name.rfind("data_batch", 0) == 0 || name.rfind("test_batch", 0) == 0))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kIo, "no batch files under " + path.string());
  return files;
}

Dataset load_cifar10_subset(const std::filesystem::path& path, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw Error(ErrorCode::kInvalidArgument, "n_per_class must be positive");
  std::vector<CifarRecord> all;
  for (const auto& f : cifar_batch_files(path)) {
    auto batch = read_cifar_batch(f);
    std::move(batch.begin(), batch.end(), std::back_inserter(all));
  }

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  RngState rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  std::vector<int> taken(kCifarClasses, 0);
  std::vector<std::size_t> chosen;
  for (std::size_t idx : order) {
    const int c = all[idx].label;
    if (taken[c] < n_per_class) {
      ++taken[c];
      chosen.push_back(idx);
    }
  }
  for (int c = 0; c < kCifarClasses; ++c)
    if (taken[c] < n_per_class)
      throw Error(ErrorCode::kInvalidArgument, "class " + std::to_string(c) + " has only " +
                                                   std::to_string(taken[c]) + " examples");

  Dataset data;
  const auto n = static_cast<Index>(chosen.size());
  data.inputs.resize(n, static_cast<Index>(kCifarImageBytes));
  std::vector<int> labels;
  for (Index i = 0; i < n; ++i) {
    const auto& rec = all[chosen[static_cast<std::size_t>(i)]];
    labels.push_back(rec.label);
    for (std::size_t j = 0; j < kCifarImageBytes; ++j) data.inputs(i, static_cast<Index>(j)) = rec.pixels[j] / 255.0;
  }
  constexpr Index plane = 1024;
  for (Index c = 0; c < 3; ++c) {
    auto block = data.inputs.middleCols(c * plane, plane);
    const double mean = block.mean();
    block.array() -= mean;
    const double sd = std::sqrt(block.squaredNorm() / static_cast<double>(block.size()));
    if (sd > 0.0) block /= sd;
  }
  data.targets = one_hot(labels, kCifarClasses);
  data.source = "cifar10:" + path.string();
  data.normalization = "scale[0,1]+per-channel-standardize";
  data.subset_seed = seed;
  data.classification = true;
  validate_dataset(data);
  return data;
}

Dataset gen_synthetic(const SyntheticOptions& o) {
  if (o.n < 1 || o.p < 1 || o.q < 1) throw Error(ErrorCode::kInvalidArgument, "n, p, q must be >= 1");
  RngState rng(o.seed);
  Dataset data;
  data.subset_seed = o.seed;
  data.normalization = "none";
  switch (o.kind) {
    case SyntheticKind::kTeacherMlp: {
      data.inputs = gaussian_matrix(o.n, o.p, rng);
      data.targets = tanh_teacher(data.inputs, o.teacher_width, o.q, rng);
      data.source = "synthetic:teacher_mlp";
      break;
    }
    case SyntheticKind::kRandomRegression: {
      data.inputs = gaussian_matrix(o.n, o.p, rng);
      const Matrix a = gaussian_matrix(o.q, o.p, rng) / std::sqrt(static_cast<double>(o.p));
      data.targets = data.inputs * a.transpose();
      if (o.noise > 0.0) data.targets += o.noise * gaussian_matrix(o.n, o.q, rng);
      data.source = "synthetic:random_regression";
      break;
    }
    case SyntheticKind::kTwoGaussians: {
      if (o.q != 2) throw Error(ErrorCode::kInvalidArgument, "two_gaussians produces q = 2 one-hot targets");
      Vector dir = gaussian_vector(o.p, rng);
      dir /= dir.norm();
      data.inputs = gaussian_matrix(o.n, o.p, rng);
      std::vector<int> labels;
      for (Index i = 0; i < o.n; ++i) {
        const int c = static_cast<int>(rng.below(2));
        labels.push_back(c);
        data.inputs.row(i) += ((c == 0 ? -0.5 : 0.5) * o.separation) * dir.transpose();
      }
      data.targets = one_hot(labels, 2);
      data.classification = true;
      data.source = "synthetic:two_gaussians";
      break;
    }
  }
  validate_dataset(data);
  return data;
}

void save_matrix(const std::filesystem::path& file, const Matrix& m) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  write_matrix(out, m);
}

Matrix load_matrix(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  Matrix m = read_matrix(in);
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::kFormat, "trailing bytes after matrix");
  return m;
}

void save_dataset(const std::filesystem::path& file, const Dataset& data) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  out.write("NEOSDS01", 8);
  write_u64(out, data.classification ? 1 : 0);
  write_u64(out, data.subset_seed);
  write_matrix(out, data.inputs);
  write_matrix(out, data.targets);
}

Dataset load_dataset(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  char magic[8];
  if (!in.read(magic, 8) || std::string(magic, 8) != "NEOSDS01") throw Error(ErrorCode::kFormat, "not a dataset cache");
  Dataset data;
  data.classification = read_u64(in) != 0;
  data.subset_seed = read_u64(in);
  data.inputs = read_matrix(in);
  data.targets = read_matrix(in);
  data.source = "cache:" + file.string();
  validate_dataset(data);
  return data;
}

}  // namespace neos
