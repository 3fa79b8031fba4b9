#pragma once

// Block-structured parameter vectors, deterministic randomness and the
// elementary vector algebra shared by the rest of the library.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "neos/error.hpp"

namespace neos {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Vector4 = Eigen::Vector4d;

struct BlockSpec {
  std::string name;
  std::vector<Index> shape;
};

class BlockLayout;
using LayoutPtr = std::shared_ptr<const BlockLayout>;

/// Ordered, named partition of a flat parameter vector. Names are dot paths
/// ("layer0.weight"). A block of shape (r, c, ...) is viewed as an
/// r x (c * ...) row-major matrix; a 1-d block of length n is n x 1.
class BlockLayout {
 public:
  struct Block {
    std::string name;
    std::vector<Index> shape;
    Index offset = 0;
    Index size = 0;
    Index rows = 0;
    Index cols = 0;
  };

  static LayoutPtr make(std::vector<BlockSpec> specs);
  /// Single block "w" of shape (dim).
  static LayoutPtr flat(Index dim, std::string name = "w");

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  Index total_dim() const noexcept { return total_dim_; }
  /// Index of the named block; throws kInvalidArgument when absent.
  std::size_t find(const std::string& name) const;

  bool same_as(const BlockLayout& other) const;

  std::vector<BlockSpec> specs() const;

 private:
  explicit BlockLayout(std::vector<Block> blocks, Index total_dim)
      : blocks_(std::move(blocks)), total_dim_(total_dim) {}

  std::vector<Block> blocks_;
  Index total_dim_ = 0;
};

bool same_layout(const LayoutPtr& a, const LayoutPtr& b);
void require_same_layout(const LayoutPtr& a, const LayoutPtr& b, const char* where);

/// A point (or direction) in parameter space. Values never change after
/// construction; every algebraic operation returns a new vector.
class ParamVector {
 public:
  using ConstBlockMap = Eigen::Map<const RowMatrix>;

  ParamVector() = default;
  ParamVector(LayoutPtr layout, Vector data);

  static ParamVector zeros(LayoutPtr layout);
  static ParamVector from_flat(LayoutPtr layout, std::span<const double> values);

  const LayoutPtr& layout() const noexcept { return layout_; }
  Index size() const noexcept { return data_.size(); }
  const Vector& flat() const noexcept { return data_; }
  std::span<const double> values() const noexcept {
    return {data_.data(), static_cast<std::size_t>(data_.size())};
  }
  double operator[](Index i) const { return data_[i]; }

  /// Matrix view of block i (row-major, shape rows x cols).
  ConstBlockMap block(std::size_t i) const;
  /// Flat segment of block i.
  Eigen::VectorBlock<const Vector> segment(std::size_t i) const;

  std::vector<double> flatten() const { return {data_.data(), data_.data() + data_.size()}; }

  bool all_finite() const { return data_.allFinite(); }
  bool is_zero() const { return data_.isZero(0.0); }

  /// Same layout, new values.
  ParamVector with(Vector data) const { return ParamVector(layout_, std::move(data)); }

 private:
  LayoutPtr layout_;
  Vector data_;
};

/// Euclidean pairing sum_i a_i b_i.
double inner(const ParamVector& a, const ParamVector& b);
/// y + alpha * x.
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);
ParamVector scale(double alpha, const ParamVector& x);
ParamVector operator+(const ParamVector& a, const ParamVector& b);
ParamVector operator-(const ParamVector& a, const ParamVector& b);
ParamVector operator*(double alpha, const ParamVector& x);
/// Matrix shapes (rows, cols) of every block, in layout order.
std::vector<std::pair<Index, Index>> matrix_shapes(const BlockLayout& layout);
ParamVector block_from_matrices(LayoutPtr layout, const std::vector<RowMatrix>& blocks);

/// Counter-based generator: draw k of a stream is splitmix64(seed, k), so a
/// (seed, counter) pair fully determines every subsequent draw on any
/// platform. Normals use the Box-Muller transform on two uniforms.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Independent stream derived from this seed and a label.
  RngState fork(std::uint64_t label) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

ParamVector gaussian_like(const LayoutPtr& layout, RngState& rng);
Vector gaussian_vector(Index n, RngState& rng);
Matrix gaussian_matrix(Index rows, Index cols, RngState& rng);

// Serialization: <base>.bin holds the flat little-endian float64 array and
// <base>.layout the key = value block descriptor.
void save_param(const ParamVector& v, const std::filesystem::path& base);
ParamVector load_param(const std::filesystem::path& base);
std::string layout_to_text(const BlockLayout& layout);
LayoutPtr layout_from_text(const std::string& text);

}  // namespace neos
