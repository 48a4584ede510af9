#include "ccm/mat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccm {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ContractViolation(msg);
}

}  // namespace

Mat::Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
  require(a.size() == static_cast<std::size_t>(r) * c, "Mat: data length does not match shape");
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::col_vec(const Vec& v) {
  Mat m(static_cast<int>(v.size()), 1);
  m.a = v;
  return m;
}

Mat Mat::row_vec(const Vec& v) {
  Mat m(1, static_cast<int>(v.size()));
  m.a = v;
  return m;
}

Mat Mat::diag(const Vec& d) {
  Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (int i = 0; i < m.rows; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
  return m;
}

Vec Mat::to_vec() const {
  require(rows == 1 || cols == 1, "to_vec: matrix is not a vector");
  return a;
}

Mat operator+(const Mat& x, const Mat& y) {
  require(x.same_shape(y), "add: shape mismatch");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

Mat operator-(const Mat& x, const Mat& y) {
  require(x.same_shape(y), "sub: shape mismatch");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

Mat operator-(const Mat& x) {
  Mat r = x;
  for (auto& v : r.a) v = -v;
  return r;
}

Mat operator*(const Mat& x, const Mat& y) {
  require(x.cols == y.rows, "mul: inner dimension mismatch");
  Mat r(x.rows, y.cols);
  // i-k-j order; this exact accumulation order is relied on by tests that
  // compare tape results against direct evaluation bit for bit.
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = &x.a[static_cast<std::size_t>(i) * x.cols];
    double* ri = &r.a[static_cast<std::size_t>(i) * r.cols];
    for (int k = 0; k < x.cols; ++k) {
      const double s = xi[k];
      if (s == 0.0) continue;
      const double* yk = &y.a[static_cast<std::size_t>(k) * y.cols];
      for (int j = 0; j < y.cols; ++j) ri[j] += s * yk[j];
    }
  }
  return r;
}

Mat operator*(double s, const Mat& x) {
  Mat r = x;
  for (auto& v : r.a) v *= s;
  return r;
}

Mat transpose(const Mat& x) {
  Mat r(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r(j, i) = x(i, j);
  return r;
}

double frobenius_norm(const Mat& x) {
  double s = 0.0;
  for (double v : x.a) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Mat& x) {
  double s = 0.0;
  for (double v : x.a) s = std::max(s, std::fabs(v));
  return s;
}

bool all_finite(const Mat& x) {
  for (double v : x.a)
    if (!std::isfinite(v)) return false;
  return true;
}

Mat sym_part_double(const Mat& x) {
  require(x.rows == x.cols, "sym_part_double: matrix not square");
  Mat r(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r(i, j) = x(i, j) + x(j, i);
  return r;
}

std::vector<double> sym_eigenvalues(const Mat& x) {
  require(x.rows == x.cols, "sym_eigenvalues: matrix not square");
  const int n = x.rows;
  const double fn = frobenius_norm(x);
  {
    double asym = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = x(i, j) - x(j, i);
        asym += 2.0 * d * d;
      }
    if (std::sqrt(asym) > 1e-9 * fn)
      throw ContractViolation("sym_eigenvalues: matrix is not symmetric");
  }
  if (n == 0) return {};
  if (n == 1) return {x(0, 0)};

  Mat w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = 0.5 * (x(i, j) + x(j, i));

  const double off_tol = 1e-12 * std::max(fn, 1e-300);
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * w(p, q) * w(p, q);
    if (std::sqrt(off) <= off_tol) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double wkp = w(k, p), wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
        }
        for (int k = 0; k < n; ++k) {
          const double wpk = w(p, k), wqk = w(q, k);
          w(p, k) = c * wpk - s * wqk;
          w(q, k) = s * wpk + c * wqk;
        }
      }
    }
  }

  std::vector<double> ev(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = w(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double sym_eig_max(const Mat& x) { return sym_eigenvalues(x).back(); }

double sym_eig_min(const Mat& x) { return sym_eigenvalues(x).front(); }

Mat null_space_basis(const Mat& b) {
  const int n = b.rows, m = b.cols;
  if (m >= n) return Mat(n, 0);

  const double bnorm = frobenius_norm(b);
  const double rank_tol = 1e-12 * std::max(bnorm, 1e-300);

  // Householder QR of b; reflectors are kept to form the full Q afterwards.
  Mat r = b;
  std::vector<Vec> reflectors;
  reflectors.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    double nrm = 0.0;
    for (int i = k; i < n; ++i) nrm += r(i, k) * r(i, k);
    nrm = std::sqrt(nrm);
    if (nrm <= rank_tol) throw SingularMatrix("null_space_basis: rank-deficient input");

    Vec v(static_cast<std::size_t>(n), 0.0);
    const double alpha = (r(k, k) >= 0.0) ? -nrm : nrm;
    for (int i = k; i < n; ++i) v[static_cast<std::size_t>(i)] = r(i, k);
    v[static_cast<std::size_t>(k)] -= alpha;
    double vnorm = 0.0;
    for (int i = k; i < n; ++i) vnorm += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    vnorm = std::sqrt(vnorm);
    if (vnorm <= rank_tol) {
      // Column already reduced; record an identity reflector.
      reflectors.push_back(Vec(static_cast<std::size_t>(n), 0.0));
      continue;
    }
    for (auto& vv : v) vv /= vnorm;
    for (int j = k; j < m; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += v[static_cast<std::size_t>(i)] * r(i, j);
      for (int i = k; i < n; ++i) r(i, j) -= 2.0 * dot * v[static_cast<std::size_t>(i)];
    }
    reflectors.push_back(std::move(v));
  }

  // Q = H_0 ... H_{m-1}; trailing columns span the orthogonal complement of
  // the column space of b, i.e. the null space of b^T.
  Mat q = Mat::identity(n);
  for (int k = m - 1; k >= 0; --k) {
    const Vec& v = reflectors[static_cast<std::size_t>(k)];
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += v[static_cast<std::size_t>(i)] * q(i, j);
      if (dot == 0.0) continue;
      for (int i = k; i < n; ++i) q(i, j) -= 2.0 * dot * v[static_cast<std::size_t>(i)];
    }
  }

  Mat basis(n, n - m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n - m; ++j) basis(i, j) = q(i, m + j);
  return basis;
}

double spectral_norm(const Mat& x) {
  if (frobenius_norm(x) == 0.0) return 0.0;
  const Mat g = (x.rows >= x.cols) ? transpose(x) * x : x * transpose(x);
  const int k = g.rows;

  Vec v(static_cast<std::size_t>(k), 1.0 / std::sqrt(static_cast<double>(k)));
  double lambda = 0.0;
  bool converged = false;
  for (int it = 0; it < 500; ++it) {
    Vec w = mat_vec(g, v);
    const double wn = norm2(w);
    if (wn == 0.0) break;  // start vector happened to lie in the null space
    for (auto& e : w) e /= wn;
    double ray = 0.0;
    {
      Vec gv = mat_vec(g, w);
      for (int i = 0; i < k; ++i) ray += w[static_cast<std::size_t>(i)] * gv[static_cast<std::size_t>(i)];
    }
    if (it > 0 && std::fabs(ray - lambda) <= 1e-13 * std::max(1.0, ray)) {
      lambda = ray;
      converged = true;
      break;
    }
    lambda = ray;
    v = std::move(w);
  }
  if (!converged) lambda = sym_eig_max(g);
  return std::sqrt(std::max(lambda, 0.0));
}

Mat inverse(const Mat& x) {
  require(x.rows == x.cols, "inverse: matrix not square");
  const int n = x.rows;
  const double piv_tol = 1e-12 * std::max(frobenius_norm(x), 1e-300);

  Mat w = x;
  Mat inv = Mat::identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::fabs(w(i, col)) > std::fabs(w(piv, col))) piv = i;
    if (std::fabs(w(piv, col)) < piv_tol)
      throw SingularMatrix("inverse: matrix is singular to working precision");
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(w(piv, j), w(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    }
    const double d = w(col, col);
    for (int j = 0; j < n; ++j) {
      w(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = w(i, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        w(i, j) -= f * w(col, j);
        inv(i, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

double norm2(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec vec_sub(const Vec& x, const Vec& y) {
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

Vec vec_add(const Vec& x, const Vec& y) {
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

Vec vec_scale(double s, const Vec& x) {
  Vec r = x;
  for (auto& v : r) v *= s;
  return r;
}

void vec_axpy(double s, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

Vec concat(const Vec& x, const Vec& y) {
  Vec r = x;
  r.insert(r.end(), y.begin(), y.end());
  return r;
}

Vec mat_vec(const Mat& m, const Vec& v) {
  if (m.cols != static_cast<int>(v.size()))
    throw ContractViolation("mat_vec: dimension mismatch");
  Vec r(static_cast<std::size_t>(m.rows), 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* mi = &m.a[static_cast<std::size_t>(i) * m.cols];
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += mi[j] * v[static_cast<std::size_t>(j)];
    r[static_cast<std::size_t>(i)] = s;
  }
  return r;
}

}  // namespace ccm
