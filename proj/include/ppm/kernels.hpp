#pragma once

#include "ppm/linops.hpp"

namespace ppm::kernels {

// Forward differences with Neumann boundary, column-major image of size nx*ny.
// Output stacks the x-differences then the y-differences.
void grad2d_serial(int nx, int ny, const double *x, double *out);
void grad2d_adjoint_serial(int nx, int ny, const double *p, double *out);
void grad2d_omp(int nx, int ny, const double *x, double *out);
void grad2d_adjoint_omp(int nx, int ny, const double *p, double *out);

Vec matvec_serial(const Mat &A, const Vec &x);
Vec matvec_omp(const Mat &A, const Vec &x);
Vec matvec_t_serial(const Mat &A, const Vec &x);
Vec matvec_t_omp(const Mat &A, const Vec &x);

int max_threads();

} // namespace ppm::kernels
