#include "ppm/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ppm::kernels {

namespace {

inline void grad_at(int nx, int ny, const double *x, double *out, int i, int j) {
  const int n = nx * ny;
  const int k = i + nx * j;
  out[k] = (i + 1 < nx) ? x[k + 1] - x[k] : 0.0;
  out[n + k] = (j + 1 < ny) ? x[k + nx] - x[k] : 0.0;
}

// Negative divergence, the exact adjoint of grad_at.
inline double grad_adj_at(int nx, int ny, const double *p, int i, int j) {
  const int n = nx * ny;
  const int k = i + nx * j;
  double v = 0;
  if (i + 1 < nx) v -= p[k];
  if (i > 0) v += p[k - 1];
  if (j + 1 < ny) v -= p[n + k];
  if (j > 0) v += p[n + k - nx];
  return v;
}

} // namespace

void grad2d_serial(int nx, int ny, const double *x, double *out) {
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) grad_at(nx, ny, x, out, i, j);
}

void grad2d_adjoint_serial(int nx, int ny, const double *p, double *out) {
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out[i + nx * j] = grad_adj_at(nx, ny, p, i, j);
}

void grad2d_omp(int nx, int ny, const double *x, double *out) {
#pragma omp parallel for schedule(static) if (nx * ny > 4096)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) grad_at(nx, ny, x, out, i, j);
}

void grad2d_adjoint_omp(int nx, int ny, const double *p, double *out) {
#pragma omp parallel for schedule(static) if (nx * ny > 4096)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out[i + nx * j] = grad_adj_at(nx, ny, p, i, j);
}

Vec matvec_serial(const Mat &A, const Vec &x) {
  Vec y(A.rows());
  for (Index r = 0; r < A.rows(); ++r) {
    double s = 0;
    for (Index c = 0; c < A.cols(); ++c) s += A(r, c) * x[c];
    y[r] = s;
  }
  return y;
}

Vec matvec_omp(const Mat &A, const Vec &x) {
  Vec y(A.rows());
  const Index rows = A.rows(), cols = A.cols();
#pragma omp parallel for schedule(static) if (rows * cols > 65536)
  for (Index r = 0; r < rows; ++r) {
    double s = 0;
    for (Index c = 0; c < cols; ++c) s += A(r, c) * x[c];
    y[r] = s;
  }
  return y;
}

Vec matvec_t_serial(const Mat &A, const Vec &x) {
  Vec y(A.cols());
  for (Index c = 0; c < A.cols(); ++c) {
    double s = 0;
    for (Index r = 0; r < A.rows(); ++r) s += A(r, c) * x[r];
    y[c] = s;
  }
  return y;
}

Vec matvec_t_omp(const Mat &A, const Vec &x) {
  Vec y(A.cols());
  const Index rows = A.rows(), cols = A.cols();
#pragma omp parallel for schedule(static) if (rows * cols > 65536)
  for (Index c = 0; c < cols; ++c) {
    double s = 0;
    for (Index r = 0; r < rows; ++r) s += A(r, c) * x[r];
    y[c] = s;
  }
  return y;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

} // namespace ppm::kernels
