#pragma once

#include <cstddef>
#include <vector>

#include "ccm/errors.hpp"

namespace ccm {

using Vec = std::vector<double>;

// Dense row-major matrix. Dimensions here top out around 10x10 for system
// matrices and 128x128 for network weights, so everything below favors
// simplicity and determinism over blocking tricks.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::vector<double> data);

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  std::size_t size() const { return a.size(); }

  static Mat identity(int n);
  static Mat col_vec(const Vec& v);
  static Mat row_vec(const Vec& v);
  static Mat diag(const Vec& d);

  Vec to_vec() const;  // flattens a single-column or single-row matrix
};

Mat operator+(const Mat& x, const Mat& y);
Mat operator-(const Mat& x, const Mat& y);
Mat operator-(const Mat& x);
Mat operator*(const Mat& x, const Mat& y);
Mat operator*(double s, const Mat& x);
Mat transpose(const Mat& x);

double frobenius_norm(const Mat& x);
double max_abs(const Mat& x);
bool all_finite(const Mat& x);

// x + x^T, written hat(x) in the contraction conditions.
Mat sym_part_double(const Mat& x);

// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
// Asymmetry beyond 1e-9 relative to the Frobenius norm is a contract error.
std::vector<double> sym_eigenvalues(const Mat& x);
double sym_eig_max(const Mat& x);
double sym_eig_min(const Mat& x);

// Orthonormal basis of the null space of b^T for a full-column-rank n-by-m
// matrix b, returned as the trailing n-m columns of the Householder QR
// factor Q. m >= n yields a zero-column basis; rank deficiency throws.
Mat null_space_basis(const Mat& b);

// Largest singular value via power iteration on the Gram matrix, with a
// Jacobi eigensolve fallback when the iteration stalls.
double spectral_norm(const Mat& x);

// Gauss-Jordan inverse with partial pivoting. Pivot below 1e-12 relative to
// the Frobenius norm throws SingularMatrix.
Mat inverse(const Mat& x);

// Vec helpers (states and controls are plain std::vector<double>).
double norm2(const Vec& v);
Vec vec_sub(const Vec& x, const Vec& y);
Vec vec_add(const Vec& x, const Vec& y);
Vec vec_scale(double s, const Vec& x);
void vec_axpy(double s, const Vec& x, Vec& y);  // y += s*x
Vec concat(const Vec& x, const Vec& y);
Vec mat_vec(const Mat& m, const Vec& v);

}  // namespace ccm
