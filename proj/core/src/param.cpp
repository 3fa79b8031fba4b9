#include "neos/param.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace neos {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// BlockLayout

LayoutPtr BlockLayout::make(std::vector<BlockSpec> specs) {
  if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "layout needs at least one block");
  std::vector<Block> blocks;
  std::set<std::string> names;
  Index offset = 0;
  for (auto& spec : specs) {
    if (spec.name.empty()) throw Error(ErrorCode::kInvalidArgument, "empty block name");
    if (!names.insert(spec.name).second)
      throw Error(ErrorCode::kInvalidArgument, "duplicate block name '" + spec.name + "'");
    if (spec.shape.empty()) throw Error(ErrorCode::kInvalidArgument, "block '" + spec.name + "' has no shape");
    Index size = 1;
    for (Index s : spec.shape) {
      if (s <= 0) throw Error(ErrorCode::kInvalidArgument, "block '" + spec.name + "' has a non-positive extent");
      size *= s;
    }
    Block b;
    b.name = std::move(spec.name);
    b.shape = std::move(spec.shape);
    b.offset = offset;
    b.size = size;
    b.rows = b.shape.front();
    b.cols = size / b.rows;
    offset += size;
    blocks.push_back(std::move(b));
  }
  return LayoutPtr(new BlockLayout(std::move(blocks), offset));
}

LayoutPtr BlockLayout::flat(Index dim, std::string name) {
  return make({BlockSpec{std::move(name), {dim}}});
}

std::size_t BlockLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return i;
  throw Error(ErrorCode::kInvalidArgument, "no block named '" + name + "'");
}

bool BlockLayout::same_as(const BlockLayout& other) const {
  if (this == &other) return true;
  if (total_dim_ != other.total_dim_ || blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name != other.blocks_[i].name || blocks_[i].shape != other.blocks_[i].shape) return false;
  }
  return true;
}

std::vector<BlockSpec> BlockLayout::specs() const {
  std::vector<BlockSpec> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back({b.name, b.shape});
  return out;
}

bool same_layout(const LayoutPtr& a, const LayoutPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->same_as(*b);
}

void require_same_layout(const LayoutPtr& a, const LayoutPtr& b, const char* where) {
  if (!same_layout(a, b)) throw Error(ErrorCode::kLayoutMismatch, where);
}

// ---------------------------------------------------------------------------
// ParamVector

ParamVector::ParamVector(LayoutPtr layout, Vector data) : layout_(std::move(layout)), data_(std::move(data)) {
  if (!layout_) throw Error(ErrorCode::kInvalidArgument, "null layout");
  if (data_.size() != layout_->total_dim())
    throw Error(ErrorCode::kLayoutMismatch, "data length " + std::to_string(data_.size()) +
                                                " != layout dimension " + std::to_string(layout_->total_dim()));
}

ParamVector ParamVector::zeros(LayoutPtr layout) {
  const Index n = layout->total_dim();
  return ParamVector(std::move(layout), Vector::Zero(n));
}

ParamVector ParamVector::from_flat(LayoutPtr layout, std::span<const double> values) {
  Vector v(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Index>(i)] = values[i];
  return ParamVector(std::move(layout), std::move(v));
}

ParamVector::ConstBlockMap ParamVector::block(std::size_t i) const {
  const auto& b = layout_->block(i);
  return ConstBlockMap(data_.data() + b.offset, b.rows, b.cols);
}

Eigen::VectorBlock<const Vector> ParamVector::segment(std::size_t i) const {
  const auto& b = layout_->block(i);
  return data_.segment(b.offset, b.size);
}

double inner(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a.layout(), b.layout(), "inner");
  return a.flat().dot(b.flat());
}

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
  require_same_layout(x.layout(), y.layout(), "axpy");
  return y.with(y.flat() + alpha * x.flat());
}

ParamVector scale(double alpha, const ParamVector& x) { return x.with(alpha * x.flat()); }

ParamVector operator+(const ParamVector& a, const ParamVector& b) { return axpy(1.0, b, a); }
ParamVector operator-(const ParamVector& a, const ParamVector& b) { return axpy(-1.0, b, a); }
ParamVector operator*(double alpha, const ParamVector& x) { return scale(alpha, x); }

std::vector<std::pair<Index, Index>> matrix_shapes(const BlockLayout& layout) {
  std::vector<std::pair<Index, Index>> out;
  for (const auto& b : layout.blocks()) out.emplace_back(b.rows, b.cols);
  return out;
}

ParamVector block_from_matrices(LayoutPtr layout, const std::vector<RowMatrix>& blocks) {
  if (blocks.size() != layout->num_blocks()) throw Error(ErrorCode::kLayoutMismatch, "block count");
  Vector data(layout->total_dim());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = layout->block(i);
    if (blocks[i].rows() != b.rows || blocks[i].cols() != b.cols)
      throw Error(ErrorCode::kLayoutMismatch, "block '" + b.name + "' shape");
    Eigen::Map<RowMatrix>(data.data() + b.offset, b.rows, b.cols) = blocks[i];
  }
  return ParamVector(std::move(layout), std::move(data));
}

// ---------------------------------------------------------------------------
// RngState

std::uint64_t RngState::next_u64() { return splitmix64(seed_ ^ splitmix64(counter_++)); }

double RngState::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngState::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngState::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "below(0)");
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

RngState RngState::fork(std::uint64_t label) const { return RngState(splitmix64(seed_ ^ splitmix64(~label))); }

Vector gaussian_vector(Index n, RngState& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Matrix gaussian_matrix(Index rows, Index cols, RngState& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

ParamVector gaussian_like(const LayoutPtr& layout, RngState& rng) {
  return ParamVector(layout, gaussian_vector(layout->total_dim(), rng));
}

// ---------------------------------------------------------------------------
// Serialization

std::string layout_to_text(const BlockLayout& layout) {
  std::ostringstream os;
  os << "format = neos-layout-v1\n";
  os << "total_dim = " << layout.total_dim() << "\n";
  os << "blocks = " << layout.num_blocks() << "\n";
  for (std::size_t i = 0; i < layout.num_blocks(); ++i) {
    const auto& b = layout.block(i);
    os << "block." << i << " = " << b.name << " ";
    for (std::size_t k = 0; k < b.shape.size(); ++k) os << (k ? "x" : "") << b.shape[k];
    os << "\n";
  }
  return os.str();
}

LayoutPtr layout_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Index declared_dim = -1;
  std::size_t declared_blocks = 0;
  std::vector<std::pair<std::size_t, BlockSpec>> found;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kFormat, "layout line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "format") {
      if (value != "neos-layout-v1") throw Error(ErrorCode::kFormat, "unknown layout format '" + value + "'");
    } else if (key == "total_dim") {
      declared_dim = std::stoll(value);
    } else if (key == "blocks") {
      declared_blocks = std::stoull(value);
    } else if (key.rfind("block.", 0) == 0) {
      const std::size_t idx = std::stoull(key.substr(6));
      const auto sp = value.find(' ');
      if (sp == std::string::npos) throw Error(ErrorCode::kFormat, "block entry needs 'name shape'");
      BlockSpec spec{value.substr(0, sp), {}};
      std::istringstream dims(trim(value.substr(sp + 1)));
      std::string tok;
      while (std::getline(dims, tok, 'x')) spec.shape.push_back(std::stoll(tok));
      found.emplace_back(idx, std::move(spec));
    } else {
      throw Error(ErrorCode::kFormat, "unknown layout key '" + key + "'");
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<BlockSpec> specs;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (found[i].first != i) throw Error(ErrorCode::kFormat, "block indices must be contiguous from 0");
    specs.push_back(std::move(found[i].second));
  }
  if (specs.size() != declared_blocks) throw Error(ErrorCode::kFormat, "block count mismatch");
  auto layout = BlockLayout::make(std::move(specs));
  if (layout->total_dim() != declared_dim) throw Error(ErrorCode::kFormat, "total_dim mismatch");
  return layout;
}

void save_param(const ParamVector& v, const std::filesystem::path& base) {
  auto bin = base;
  bin += ".bin";
  auto desc = base;
  desc += ".layout";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + bin.string());
  for (double x : v.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  std::ofstream lay(desc);
  if (!lay) throw Error(ErrorCode::kIo, "cannot open " + desc.string());
  lay << layout_to_text(*v.layout());
}

ParamVector load_param(const std::filesystem::path& base) {
  auto bin = base;
  bin += ".bin";
  auto desc = base;
  desc += ".layout";
  std::ifstream lay(desc);
  if (!lay) throw Error(ErrorCode::kIo, "cannot open " + desc.string());
  std::stringstream ss;
  ss << lay.rdbuf();
  auto layout = layout_from_text(ss.str());

  std::ifstream in(bin, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + bin.string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() != static_cast<std::size_t>(layout->total_dim()) * 8)
    throw Error(ErrorCode::kFormat, "binary size does not match layout");
  Vector data(layout->total_dim());
  for (Index i = 0; i < data.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[static_cast<std::size_t>(8 * i + k)]) << (8 * k);
    data[i] = std::bit_cast<double>(bits);
  }
  return ParamVector(std::move(layout), std::move(data));
}

}  // namespace neos
