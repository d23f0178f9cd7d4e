#include "ppm/linops.hpp"

#include "ppm/kernels.hpp"
#include "ppm/rng.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace ppm {

BlockLayout::BlockLayout(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  Index next = 0;
  for (const auto &b : blocks_) {
    if (b.offset != next || b.length <= 0)
      throw DimensionError("block layout: blocks must be contiguous, ordered and non-empty");
    next += b.length;
  }
  total_ = next;
}

BlockLayout BlockLayout::single(Index n) { return BlockLayout({Block{0, n}}); }

BlockLayout BlockLayout::uniform(Index n_blocks, Index block_len) {
  std::vector<Block> b;
  for (Index j = 0; j < n_blocks; ++j) b.push_back({j * block_len, block_len});
  return BlockLayout(std::move(b));
}

BlockLayout BlockLayout::from_lengths(const std::vector<Index> &lengths) {
  std::vector<Block> b;
  Index off = 0;
  for (Index l : lengths) {
    b.push_back({off, l});
    off += l;
  }
  return BlockLayout(std::move(b));
}

bool BlockLayout::operator==(const BlockLayout &o) const {
  if (blocks_.size() != o.blocks_.size()) return false;
  for (std::size_t j = 0; j < blocks_.size(); ++j)
    if (blocks_[j].offset != o.blocks_[j].offset || blocks_[j].length != o.blocks_[j].length) return false;
  return true;
}

BlockVec::BlockVec(Vec d, BlockLayout l) : data(std::move(d)), layout(std::move(l)) {
  if (layout.total() != data.size()) throw DimensionError("BlockVec: layout does not cover data");
}

BlockVec::BlockVec(Vec d) : data(std::move(d)), layout(BlockLayout::single(data.size())) {}

BlockVec BlockVec::operator+(const BlockVec &o) const {
  if (!(layout == o.layout)) throw DimensionError("BlockVec: layout mismatch");
  return BlockVec(data + o.data, layout);
}

BlockVec BlockVec::operator-(const BlockVec &o) const {
  if (!(layout == o.layout)) throw DimensionError("BlockVec: layout mismatch");
  return BlockVec(data - o.data, layout);
}

BlockVec BlockVec::operator*(double a) const { return BlockVec(data * a, layout); }

std::string to_string(MapTag t) {
  switch (t) {
  case MapTag::dense: return "dense";
  case MapTag::diagonal: return "diagonal";
  case MapTag::block_diagonal: return "block-diagonal";
  case MapTag::composite: return "composite";
  case MapTag::projection: return "projection";
  case MapTag::scaled_identity: return "scaled-identity";
  }
  return "?";
}

LinearMap::LinearMap(Index dim_in, Index dim_out, Fn apply, Fn apply_adjoint, MapTag tag)
    : in_(dim_in), out_(dim_out), fwd_(std::move(apply)), adj_(std::move(apply_adjoint)), tag_(tag) {}

Vec LinearMap::apply(const Vec &x) const {
  if (x.size() != in_) {
    std::ostringstream s;
    s << "LinearMap::apply: expected dimension " << in_ << ", got " << x.size();
    throw DimensionError(s.str());
  }
  return fwd_(x);
}

Vec LinearMap::apply_adjoint(const Vec &z) const {
  if (z.size() != out_) {
    std::ostringstream s;
    s << "LinearMap::apply_adjoint: expected dimension " << out_ << ", got " << z.size();
    throw DimensionError(s.str());
  }
  return adj_(z);
}

LinearMap LinearMap::adjoint() const {
  return LinearMap(out_, in_, adj_, fwd_, tag_);
}

Mat LinearMap::to_dense() const {
  Mat A(out_, in_);
  Vec e = Vec::Zero(in_);
  for (Index k = 0; k < in_; ++k) {
    e[k] = 1;
    A.col(k) = apply(e);
    e[k] = 0;
  }
  return A;
}

LinearMap dense(Mat A) {
  auto M = std::make_shared<const Mat>(std::move(A));
  return LinearMap(
      M->cols(), M->rows(), [M](const Vec &x) { return kernels::matvec_omp(*M, x); },
      [M](const Vec &z) { return kernels::matvec_t_omp(*M, z); }, MapTag::dense);
}

LinearMap diagonal(Vec d) {
  auto D = std::make_shared<const Vec>(std::move(d));
  auto f = [D](const Vec &x) -> Vec { return D->cwiseProduct(x); };
  return LinearMap(D->size(), D->size(), f, f, MapTag::diagonal);
}

LinearMap scaled_identity(Index n, double a) {
  auto f = [a](const Vec &x) -> Vec { return a * x; };
  return LinearMap(n, n, f, f, MapTag::scaled_identity);
}

LinearMap identity(Index n) { return scaled_identity(n, 1.0); }

LinearMap zero_map(Index dim_in, Index dim_out) {
  return LinearMap(
      dim_in, dim_out, [dim_out](const Vec &) -> Vec { return Vec::Zero(dim_out); },
      [dim_in](const Vec &) -> Vec { return Vec::Zero(dim_in); }, MapTag::scaled_identity);
}

LinearMap block_projection(const BlockLayout &layout, const std::vector<std::size_t> &blocks) {
  Vec mask = Vec::Zero(layout.total());
  for (auto j : blocks) {
    if (j >= layout.size()) throw DimensionError("block_projection: block index out of range");
    mask.segment(layout[j].offset, layout[j].length).setOnes();
  }
  auto D = std::make_shared<const Vec>(std::move(mask));
  auto f = [D](const Vec &x) -> Vec { return D->cwiseProduct(x); };
  return LinearMap(layout.total(), layout.total(), f, f, MapTag::projection);
}

LinearMap block_diag(const std::vector<LinearMap> &parts) {
  Index in = 0, out = 0;
  for (const auto &p : parts) {
    in += p.dim_in();
    out += p.dim_out();
  }
  auto P = std::make_shared<const std::vector<LinearMap>>(parts);
  auto fwd = [P, out](const Vec &x) {
    Vec y(out);
    Index oi = 0, oo = 0;
    for (const auto &p : *P) {
      y.segment(oo, p.dim_out()) = p.apply(x.segment(oi, p.dim_in()));
      oi += p.dim_in();
      oo += p.dim_out();
    }
    return y;
  };
  auto adj = [P, in](const Vec &z) {
    Vec y(in);
    Index oi = 0, oo = 0;
    for (const auto &p : *P) {
      y.segment(oi, p.dim_in()) = p.apply_adjoint(z.segment(oo, p.dim_out()));
      oi += p.dim_in();
      oo += p.dim_out();
    }
    return y;
  };
  return LinearMap(in, out, fwd, adj, MapTag::block_diagonal);
}

LinearMap compose(const LinearMap &A, const LinearMap &B) {
  if (A.dim_in() != B.dim_out()) throw DimensionError("compose: inner dimensions differ");
  return LinearMap(
      B.dim_in(), A.dim_out(), [A, B](const Vec &x) { return A.apply(B.apply(x)); },
      [A, B](const Vec &z) { return B.apply_adjoint(A.apply_adjoint(z)); }, MapTag::composite);
}

LinearMap sum(const LinearMap &A, const LinearMap &B) {
  if (A.dim_in() != B.dim_in() || A.dim_out() != B.dim_out()) throw DimensionError("sum: dimensions differ");
  return LinearMap(
      A.dim_in(), A.dim_out(), [A, B](const Vec &x) -> Vec { return A.apply(x) + B.apply(x); },
      [A, B](const Vec &z) -> Vec { return A.apply_adjoint(z) + B.apply_adjoint(z); }, MapTag::composite);
}

LinearMap scale(double a, const LinearMap &A) {
  return LinearMap(
      A.dim_in(), A.dim_out(), [a, A](const Vec &x) -> Vec { return a * A.apply(x); },
      [a, A](const Vec &z) -> Vec { return a * A.apply_adjoint(z); }, MapTag::composite);
}

LinearMap block_2x2(const LinearMap &A, const LinearMap &B, const LinearMap &C, const LinearMap &D) {
  const Index n = A.dim_in(), m = D.dim_in();
  if (A.dim_out() != n || B.dim_in() != m || B.dim_out() != n || C.dim_in() != n || C.dim_out() != m ||
      D.dim_out() != m)
    throw DimensionError("block_2x2: block dimensions do not conform");
  auto fwd = [=](const Vec &u) {
    Vec r(n + m);
    Vec x = u.head(n), y = u.tail(m);
    r.head(n) = A.apply(x) + B.apply(y);
    r.tail(m) = C.apply(x) + D.apply(y);
    return r;
  };
  auto adj = [=](const Vec &u) {
    Vec r(n + m);
    Vec x = u.head(n), y = u.tail(m);
    r.head(n) = A.apply_adjoint(x) + C.apply_adjoint(y);
    r.tail(m) = B.apply_adjoint(x) + D.apply_adjoint(y);
    return r;
  };
  return LinearMap(n + m, n + m, fwd, adj, MapTag::composite);
}

double pair(const LinearMap &T, const Vec &x, const Vec &z) {
  if (z.size() != T.dim_out()) throw DimensionError("pair: dimension mismatch");
  return T.apply(x).dot(z);
}

double seminorm_sq(const LinearMap &M, const Vec &x) {
  if (M.dim_in() != M.dim_out()) throw DimensionError("seminorm_sq: map is not square");
  return M.apply(x).dot(x);
}

SymmetryProbe probe_self_adjoint(const LinearMap &M, int n_probes, double tol, std::uint64_t seed) {
  if (M.dim_in() != M.dim_out()) throw DimensionError("probe_self_adjoint: map is not square");
  CounterRng rng(seed, 0x5a);
  std::normal_distribution<double> nd;
  SymmetryProbe r{true, 0.0};
  const Index n = M.dim_in();
  for (int p = 0; p < n_probes; ++p) {
    Vec x(n), z(n);
    for (Index k = 0; k < n; ++k) x[k] = nd(rng);
    for (Index k = 0; k < n; ++k) z[k] = nd(rng);
    Vec Mx = M.apply(x), Mz = M.apply(z);
    double dev = std::abs(Mx.dot(z) - x.dot(Mz));
    double sc = Mx.norm() * z.norm() + Mz.norm() * x.norm() + 1.0;
    r.max_deviation = std::max(r.max_deviation, dev);
    if (dev > tol * sc) r.pass = false;
  }
  return r;
}

double op_norm(const LinearMap &K, double tol, int max_iter, std::uint64_t seed) {
  CounterRng rng(seed, 0x0b);
  std::normal_distribution<double> nd;
  Vec x(K.dim_in());
  for (Index k = 0; k < x.size(); ++k) x[k] = nd(rng);
  if (x.size() == 0) return 0;
  x.normalize();
  double est = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vec y = K.apply_adjoint(K.apply(x));
    double nrm = y.norm();
    if (nrm == 0) return 0;
    double next = std::sqrt(nrm);
    x = y / nrm;
    if (it > 0 && std::abs(next - est) <= tol * next) return next;
    est = next;
  }
  throw NonConvergence("op_norm: power iteration did not stagnate within max_iter", est);
}

} // namespace ppm
