#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Block {
  Index offset = 0;
  Index length = 0;
};

// Ordered, disjoint blocks covering [0, total).
class BlockLayout {
public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<Block> blocks);
  static BlockLayout single(Index n);
  static BlockLayout uniform(Index n_blocks, Index block_len);
  static BlockLayout from_lengths(const std::vector<Index> &lengths);

  Index total() const { return total_; }
  std::size_t size() const { return blocks_.size(); }
  const Block &operator[](std::size_t j) const { return blocks_[j]; }
  const std::vector<Block> &blocks() const { return blocks_; }
  bool operator==(const BlockLayout &o) const;

private:
  std::vector<Block> blocks_;
  Index total_ = 0;
};

struct BlockVec {
  Vec data;
  BlockLayout layout;

  BlockVec() = default;
  BlockVec(Vec d, BlockLayout l);
  explicit BlockVec(Vec d);

  Index size() const { return data.size(); }
  auto block(std::size_t j) { return data.segment(layout[j].offset, layout[j].length); }
  auto block(std::size_t j) const { return data.segment(layout[j].offset, layout[j].length); }

  BlockVec operator+(const BlockVec &o) const;
  BlockVec operator-(const BlockVec &o) const;
  BlockVec operator*(double a) const;
};

enum class MapTag { dense, diagonal, block_diagonal, composite, projection, scaled_identity };
std::string to_string(MapTag t);

class LinearMap {
public:
  using Fn = std::function<Vec(const Vec &)>;

  LinearMap() = default;
  LinearMap(Index dim_in, Index dim_out, Fn apply, Fn apply_adjoint, MapTag tag);

  Index dim_in() const { return in_; }
  Index dim_out() const { return out_; }
  MapTag tag() const { return tag_; }

  Vec apply(const Vec &x) const;
  Vec apply_adjoint(const Vec &z) const;
  Vec operator()(const Vec &x) const { return apply(x); }
  LinearMap adjoint() const;
  Mat to_dense() const;

private:
  Index in_ = 0, out_ = 0;
  Fn fwd_, adj_;
  MapTag tag_ = MapTag::composite;
};

LinearMap dense(Mat A);
LinearMap diagonal(Vec d);
LinearMap scaled_identity(Index n, double a);
LinearMap identity(Index n);
LinearMap zero_map(Index dim_in, Index dim_out);
LinearMap block_projection(const BlockLayout &layout, const std::vector<std::size_t> &blocks);
LinearMap block_diag(const std::vector<LinearMap> &parts);
LinearMap compose(const LinearMap &A, const LinearMap &B); // A∘B
LinearMap sum(const LinearMap &A, const LinearMap &B);
LinearMap scale(double a, const LinearMap &A);
// [[A, B], [C, D]] acting on (x, y).
LinearMap block_2x2(const LinearMap &A, const LinearMap &B, const LinearMap &C, const LinearMap &D);

double pair(const LinearMap &T, const Vec &x, const Vec &z);
double seminorm_sq(const LinearMap &M, const Vec &x);

struct SymmetryProbe {
  bool pass = false;
  double max_deviation = 0;
};
SymmetryProbe probe_self_adjoint(const LinearMap &M, int n_probes, double tol, std::uint64_t seed);

struct NonConvergence : std::runtime_error {
  double estimate;
  NonConvergence(const std::string &msg, double est) : std::runtime_error(msg), estimate(est) {}
};

double op_norm(const LinearMap &K, double tol = 1e-10, int max_iter = 10000, std::uint64_t seed = 0);

} // namespace ppm
