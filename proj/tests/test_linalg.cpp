#include <cmath>
#include <vector>

#include "ccm/mat.hpp"
#include "ccm/rng.hpp"
#include "doctest.h"

using namespace ccm;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (auto& v : m.a) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

Mat random_sym(Rng& rng, int n, double scale = 1.0) {
  Mat m = random_mat(rng, n, n, scale);
  Mat s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

// Oracle: eigenvalue count below t from the inertia of an LDL^T sweep.
// Returns -1 if a pivot degenerates, in which case the caller nudges t.
int eigs_below(const Mat& a, double t) {
  const int n = a.rows;
  Mat w = a;
  for (int i = 0; i < n; ++i) w(i, i) -= t;
  int neg = 0;
  for (int k = 0; k < n; ++k) {
    const double piv = w(k, k);
    if (std::fabs(piv) < 1e-13) return -1;
    if (piv < 0.0) ++neg;
    for (int i = k + 1; i < n; ++i) {
      const double f = w(i, k) / piv;
      for (int j = k; j < n; ++j) w(i, j) -= f * w(k, j);
    }
  }
  return neg;
}

// Oracle: largest eigenvalue of a symmetric matrix by bisection on the
// inertia count, bracketed by Gershgorin discs. Independent of Jacobi.
double eig_max_bisection(const Mat& a) {
  const int n = a.rows;
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < n; ++i) {
    double radius = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) radius += std::fabs(a(i, j));
    lo = std::min(lo, a(i, i) - radius);
    hi = std::max(hi, a(i, i) + radius);
  }
  lo -= 1.0;
  hi += 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    int cnt = eigs_below(a, mid);
    int kick = 0;
    while (cnt < 0 && kick < 20) {  // move off a degenerate pivot
      mid += (hi - lo) * 1e-7;
      cnt = eigs_below(a, mid);
      ++kick;
    }
    if (cnt < 0) break;
    if (cnt == n)
      hi = mid;  // all eigenvalues below mid
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Oracle: orthonormal complement of the column space of b via classical
// Gram-Schmidt against the coordinate basis.
Mat complement_gram_schmidt(const Mat& b) {
  const int n = b.rows;
  std::vector<Vec> basis;
  for (int j = 0; j < b.cols; ++j) {
    Vec v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = b(i, j);
    for (const auto& u : basis) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] -= dot * u[static_cast<std::size_t>(i)];
    }
    const double nv = norm2(v);
    REQUIRE(nv > 1e-10);
    for (auto& x : v) x /= nv;
    basis.push_back(v);
  }
  std::vector<Vec> comp;
  for (int e = 0; e < n && static_cast<int>(comp.size()) < n - b.cols; ++e) {
    Vec v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(e)] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {  // re-orthogonalize once
      for (const auto& u : basis) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] -= dot * u[static_cast<std::size_t>(i)];
      }
      for (const auto& u : comp) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] -= dot * u[static_cast<std::size_t>(i)];
      }
    }
    const double nv = norm2(v);
    if (nv < 1e-8) continue;
    for (auto& x : v) x /= nv;
    comp.push_back(v);
  }
  Mat out(n, static_cast<int>(comp.size()));
  for (int j = 0; j < out.cols; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = comp[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("sym_eig_max on fixed matrices") {
  Mat a(2, 2, {2, 1, 1, 2});
  CHECK(sym_eig_max(a) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sym_eig_max(Mat::identity(5)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sym_eig_min(a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sym_eig_max matches inertia-bisection oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    Mat a = random_sym(rng, 6, 3.0);
    const double got = sym_eig_max(a);
    const double want = eig_max_bisection(a);
    CHECK(std::fabs(got - want) <= 1e-8);
  }
}

TEST_CASE("eigenvalue properties") {
  Rng rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    Mat a = random_sym(rng, 5, 2.0);
    Mat b = random_sym(rng, 5, 2.0);
    // trace-like bound: lambda_max(a) >= lambda_min(a)
    CHECK(sym_eig_max(a) + sym_eig_max(-a) >= -1e-10);
    // Weyl perturbation bound
    CHECK(std::fabs(sym_eig_max(a) - sym_eig_max(b)) <= spectral_norm(a - b) + 1e-9);
  }
}

TEST_CASE("sym_eigenvalues rejects bad input") {
  CHECK_THROWS_AS(sym_eig_max(Mat(2, 3)), ContractViolation);
  Mat bad(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(sym_eig_max(bad), ContractViolation);
}

TEST_CASE("null_space_basis on constant-input matrix") {
  // columns e3, e4 of R^4: complement is span(e1, e2)
  Mat b(4, 2);
  b(2, 0) = 1.0;
  b(3, 1) = 1.0;
  Mat u = null_space_basis(b);
  REQUIRE(u.rows == 4);
  REQUIRE(u.cols == 2);
  CHECK(frobenius_norm(transpose(u) * b) <= 1e-12);
  CHECK(frobenius_norm(transpose(u) * u - Mat::identity(2)) <= 1e-12);
  // spans exactly the first two coordinates
  Mat proj = u * transpose(u);
  Mat want(4, 4);
  want(0, 0) = want(1, 1) = 1.0;
  CHECK(frobenius_norm(proj - want) <= 1e-12);
}

TEST_CASE("null_space_basis matches Gram-Schmidt oracle") {
  Rng rng(103);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + rng.uniform_int(5);
    const int m = 1 + rng.uniform_int(n - 1);
    Mat b = random_mat(rng, n, m);
    Mat u = null_space_basis(b);
    REQUIRE(u.cols == n - m);
    CHECK(frobenius_norm(transpose(u) * u - Mat::identity(n - m)) <= 1e-12);
    CHECK(frobenius_norm(transpose(u) * b) <= 1e-12 * (1.0 + frobenius_norm(b)));
    Mat v = complement_gram_schmidt(b);
    REQUIRE(v.cols == n - m);
    // same subspace iff the orthogonal projectors agree
    CHECK(frobenius_norm(u * transpose(u) - v * transpose(v)) <= 1e-9);
  }
}

TEST_CASE("null_space_basis edge cases") {
  Rng rng(104);
  Mat sq = random_mat(rng, 3, 3) + 3.0 * Mat::identity(3);
  CHECK(null_space_basis(sq).cols == 0);
  CHECK(null_space_basis(random_mat(rng, 3, 5)).cols == 0);

  Mat rankdef(4, 2);
  for (int i = 0; i < 4; ++i) {
    rankdef(i, 0) = i + 1.0;
    rankdef(i, 1) = 2.0 * (i + 1.0);
  }
  CHECK_THROWS_AS(null_space_basis(rankdef), SingularMatrix);
}

TEST_CASE("null_space_basis is deterministic") {
  Rng rng(105);
  Mat b = random_mat(rng, 6, 2);
  Mat u1 = null_space_basis(b);
  Mat u2 = null_space_basis(b);
  CHECK(frobenius_norm(u1 - u2) == 0.0);
}

TEST_CASE("spectral_norm fixed and random cases") {
  CHECK(spectral_norm(Mat::diag({3.0, -5.0})) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(spectral_norm(Mat(4, 4)) == 0.0);

  Rng rng(106);
  for (int trial = 0; trial < 30; ++trial) {
    Mat a = random_mat(rng, 4, 7, 2.0);
    const double got = spectral_norm(a);
    const double want = std::sqrt(std::max(0.0, sym_eig_max(transpose(a) * a)));
    CHECK(got == doctest::Approx(want).epsilon(1e-7));
  }
}

TEST_CASE("inverse fixed and SPD cases") {
  Mat d = Mat::diag({2.0, 4.0});
  Mat di = inverse(d);
  CHECK(di(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(di(1, 1) == doctest::Approx(0.25).epsilon(1e-14));

  Rng rng(107);
  for (int trial = 0; trial < 30; ++trial) {
    Mat g = random_mat(rng, 6, 6);
    Mat spd = transpose(g) * g + Mat::identity(6);
    Mat inv = inverse(spd);
    CHECK(frobenius_norm(spd * inv - Mat::identity(6)) <= 1e-10);
  }
}

TEST_CASE("inverse rejects singular input") {
  Mat z(3, 3);
  CHECK_THROWS_AS(inverse(z), SingularMatrix);
  Mat r(2, 2, {1, 2, 2, 4});
  CHECK_THROWS_AS(inverse(r), SingularMatrix);
}

TEST_CASE("unit vectors are unit and reproducible") {
  Rng a(42), b(42);
  for (int trial = 0; trial < 100; ++trial) {
    Vec u = a.unit_vector(4);
    Vec v = b.unit_vector(4);
    CHECK(norm2(u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm2(vec_sub(u, v)) == 0.0);
  }
}

TEST_CASE("matrix algebra identities") {
  Rng rng(108);
  Mat a = random_mat(rng, 3, 5);
  Mat b = random_mat(rng, 5, 2);
  CHECK(frobenius_norm(transpose(a * b) - transpose(b) * transpose(a)) <= 1e-13);
  Mat s = random_sym(rng, 4);
  Mat h = sym_part_double(s);
  CHECK(frobenius_norm(h - 2.0 * s) <= 1e-13);
}

}  // TEST_SUITE
