#include <cmath>
#include <functional>
#include <vector>

#include "ccm/diffnet.hpp"
#include "ccm/rng.hpp"
#include "doctest.h"

using namespace ccm;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (auto& v : m.a) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

// Central finite difference of a tape-built scalar with respect to every
// entry of every registered parameter array.
void check_tape_gradients(std::vector<Mat>& params,
                          const std::function<int(Tape&)>& build,
                          double h = 1e-6, double tol = 1e-6) {
  ParamRefs refs;
  for (auto& p : params) refs.add(&p);

  Tape tape(&refs);
  const int root = build(tape);
  std::vector<Mat> grads = refs.zeros_like();
  tape.backward(root, grads);

  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].a.size(); ++i) {
      const double orig = params[k].a[i];
      params[k].a[i] = orig + h;
      Tape tp(&refs);
      const double fp = tp.scalar(build(tp));
      params[k].a[i] = orig - h;
      Tape tm(&refs);
      const double fm = tm.scalar(build(tm));
      params[k].a[i] = orig;
      const double want = (fp - fm) / (2.0 * h);
      const double got = grads[k].a[i];
      CHECK(std::fabs(got - want) <= tol * (1.0 + std::fabs(want)));
    }
  }
}

}  // namespace

TEST_SUITE("diffnet") {

TEST_CASE("mlp2_forward fixed cases") {
  Mlp2 net = Mlp2::zeros(2, 3, 2);
  net.b2(0, 0) = 1.5;
  net.b2(1, 0) = -0.5;
  Vec y = mlp2_forward(net, {0.3, -0.7});
  CHECK(y[0] == 1.5);  // zero weights pass only the output bias through
  CHECK(y[1] == -0.5);

  Mlp2 one = Mlp2::zeros(1, 1, 1);
  one.w1(0, 0) = 1.0;
  one.w2(0, 0) = 1.0;
  Vec y1 = mlp2_forward(one, {0.5});
  CHECK(y1[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("mlp2_forward matches a direct reimplementation") {
  Rng rng(201);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp2 net = Mlp2::init(3, 8, 4, rng);
    Vec x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    Vec got = mlp2_forward(net, x);
    for (int o = 0; o < 4; ++o) {
      double s = net.b2(o, 0);
      for (int h = 0; h < 8; ++h) {
        double z = net.b1(h, 0);
        for (int i = 0; i < 3; ++i) z += net.w1(h, i) * x[static_cast<std::size_t>(i)];
        s += net.w2(o, h) * std::tanh(z);
      }
      CHECK(got[static_cast<std::size_t>(o)] == doctest::Approx(s).epsilon(1e-14));
    }
  }
}

TEST_CASE("mlp2_input_jacobian fixed cases") {
  Mlp2 net = Mlp2::zeros(2, 3, 2);
  net.b2(0, 0) = 3.0;
  Mat j0 = mlp2_input_jacobian(net, {1.0, -1.0});
  CHECK(frobenius_norm(j0) == 0.0);

  // 1-1-1 identity-weight net at x = 0: slope is tanh'(0) = 1
  Mlp2 one = Mlp2::zeros(1, 1, 1);
  one.w1(0, 0) = 1.0;
  one.w2(0, 0) = 1.0;
  Mat j1 = mlp2_input_jacobian(one, {0.0});
  CHECK(j1(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mlp2_input_jacobian matches finite differences") {
  Rng rng(202);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    Mlp2 net = Mlp2::init(4, 16, 5, rng);
    Vec x(4);
    for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    Mat j = mlp2_input_jacobian(net, x);
    for (int i = 0; i < 4; ++i) {
      Vec xp = x, xm = x;
      xp[static_cast<std::size_t>(i)] += h;
      xm[static_cast<std::size_t>(i)] -= h;
      Vec yp = mlp2_forward(net, xp);
      Vec ym = mlp2_forward(net, xm);
      for (int o = 0; o < 5; ++o) {
        const double want =
            (yp[static_cast<std::size_t>(o)] - ym[static_cast<std::size_t>(o)]) / (2.0 * h);
        CHECK(std::fabs(j(o, i) - want) <= 1e-5 * (1.0 + std::fabs(want)));
      }
    }
  }
}

TEST_CASE("tape forward agrees with direct evaluation") {
  Rng rng(203);
  Mlp2 net = Mlp2::init(3, 8, 4, rng);
  ParamRefs refs;
  MlpSlots slots = register_mlp(refs, net);
  Vec x = {0.4, -0.2, 0.9};

  Tape tape(&refs);
  int z = -1;
  const int y = tape_mlp_forward(tape, slots, tape.constant(Mat::col_vec(x)), &z);
  Vec direct = mlp2_forward(net, x);
  for (int o = 0; o < 4; ++o) CHECK(tape.value(y)(o, 0) == direct[static_cast<std::size_t>(o)]);

  const int j = tape_mlp_jacobian(tape, slots, z);
  Mat jd = mlp2_input_jacobian(net, x);
  CHECK(frobenius_norm(tape.value(j) - jd) == 0.0);
}

TEST_CASE("per-op tape gradients match finite differences") {
  Rng rng(204);

  SUBCASE("add sub neg scale") {
    std::vector<Mat> ps = {random_mat(rng, 2, 3), random_mat(rng, 2, 3)};
    Mat r = random_mat(rng, 2, 3);
    check_tape_gradients(ps, [&](Tape& t) {
      int a = t.param(0), b = t.param(1);
      int e = t.sub(t.add(a, t.neg(b)), t.scale(0.7, a));
      return t.sum_all(t.hadamard(e, t.constant(r)));
    });
  }

  SUBCASE("matmul transpose") {
    std::vector<Mat> ps = {random_mat(rng, 2, 4), random_mat(rng, 4, 3)};
    Mat r = random_mat(rng, 3, 2);
    check_tape_gradients(ps, [&](Tape& t) {
      int m = t.matmul(t.param(0), t.param(1));
      return t.sum_all(t.hadamard(t.transpose_node(m), t.constant(r)));
    });
  }

  SUBCASE("scalar_mul") {
    std::vector<Mat> ps = {random_mat(rng, 1, 1), random_mat(rng, 3, 3)};
    Mat r = random_mat(rng, 3, 3);
    check_tape_gradients(ps, [&](Tape& t) {
      return t.sum_all(t.hadamard(t.scalar_mul(t.param(0), t.param(1)), t.constant(r)));
    });
  }

  SUBCASE("hadamard colscale") {
    std::vector<Mat> ps = {random_mat(rng, 3, 4), random_mat(rng, 4, 1), random_mat(rng, 3, 4)};
    Mat r = random_mat(rng, 3, 4);
    check_tape_gradients(ps, [&](Tape& t) {
      int cs = t.colscale(t.param(0), t.param(1));
      return t.sum_all(t.hadamard(t.hadamard(cs, t.param(2)), t.constant(r)));
    });
  }

  SUBCASE("tanh dtanh") {
    std::vector<Mat> ps = {random_mat(rng, 3, 2)};
    Mat r = random_mat(rng, 3, 2);
    check_tape_gradients(ps, [&](Tape& t) {
      int a = t.tanh_node(t.param(0));
      int b = t.dtanh_node(t.param(0));
      return t.sum_all(t.hadamard(t.add(a, b), t.constant(r)));
    });
  }

  SUBCASE("reshape concat_cols") {
    std::vector<Mat> ps = {random_mat(rng, 2, 6), random_mat(rng, 4, 2)};
    Mat r = random_mat(rng, 4, 5);
    check_tape_gradients(ps, [&](Tape& t) {
      int a = t.reshape(t.param(0), 4, 3);
      int c = t.concat_cols({a, t.param(1)});
      return t.sum_all(t.hadamard(c, t.constant(r)));
    });
  }

  SUBCASE("hinge_quad") {
    std::vector<Vec> probes;
    Rng prng(99);
    for (int i = 0; i < 16; ++i) probes.push_back(prng.unit_vector(3));
    std::vector<Mat> ps = {random_mat(rng, 3, 3)};
    check_tape_gradients(
        ps, [&](Tape& t) { return t.hinge_quad(t.param(0), &probes, 0.1); }, 1e-6, 1e-5);
  }

  SUBCASE("frob_norm") {
    std::vector<Mat> ps = {random_mat(rng, 3, 4)};
    check_tape_gradients(ps, [&](Tape& t) { return t.frob_norm(t.param(0)); });
  }

  SUBCASE("full mlp jacobian pipeline") {
    Mlp2 net = Mlp2::init(3, 6, 4, rng);
    std::vector<Mat> ps = {net.w1, net.b1, net.w2, net.b2};
    Mat r = random_mat(rng, 4, 2);
    Mat sel(3, 2);
    sel(0, 0) = 1.0;
    sel(2, 1) = 1.0;
    Vec x = {0.2, -0.5, 1.1};
    check_tape_gradients(ps, [&](Tape& t) {
      MlpSlots s{0, 1, 2, 3};
      int z = -1;
      (void)tape_mlp_forward(t, s, t.constant(Mat::col_vec(x)), &z);
      int j = tape_mlp_jacobian(t, s, z, t.constant(sel));
      return t.sum_all(t.hadamard(j, t.constant(r)));
    });
  }
}

TEST_CASE("simple analytic gradients") {
  // loss = sum of squares: gradient is exactly 2*theta
  Rng rng(205);
  std::vector<Mat> ps = {random_mat(rng, 3, 3)};
  ParamRefs refs;
  refs.add(&ps[0]);
  Tape t(&refs);
  const int root = t.sum_all(t.hadamard(t.param(0), t.param(0)));
  std::vector<Mat> grads = refs.zeros_like();
  t.backward(root, grads);
  CHECK(frobenius_norm(grads[0] - 2.0 * ps[0]) == 0.0);

  // loss independent of parameters: gradient is exactly zero
  Tape t2(&refs);
  const int root2 = t2.sum_all(t2.constant(Mat::identity(2)));
  std::vector<Mat> g2 = refs.zeros_like();
  t2.backward(root2, g2);
  CHECK(frobenius_norm(g2[0]) == 0.0);
}

TEST_CASE("adam fixed behavior") {
  Mat p(2, 2, {1.0, -2.0, 3.0, 0.5});
  Mat p0 = p;
  ParamRefs refs;
  refs.add(&p);
  AdamState st = AdamState::init(refs, 1e-3);

  std::vector<Mat> zero = refs.zeros_like();
  adam_step(refs, zero, st);
  CHECK(frobenius_norm(p - p0) == 0.0);

  // first step from fresh state: delta = -lr * g / (|g| + eps)
  AdamState st2 = AdamState::init(refs, 1e-3);
  std::vector<Mat> g = refs.zeros_like();
  g[0] = Mat(2, 2, {0.5, -1.0, 2.0, 0.0});
  Mat before = p;
  adam_step(refs, g, st2);
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    const double gi = g[0].a[i];
    const double want = before.a[i] - 1e-3 * gi / (std::fabs(gi) + 1e-8);
    CHECK(p.a[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("adam descends a quadratic bowl") {
  Mat p(1, 4, {4.0, -3.0, 2.0, -1.0});
  ParamRefs refs;
  refs.add(&p);
  AdamState st = AdamState::init(refs, 0.05);
  double prev = 1e300;
  for (int it = 0; it < 100; ++it) {
    std::vector<Mat> g = refs.zeros_like();
    g[0] = 2.0 * p;
    adam_step(refs, g, st);
    double f = 0.0;
    for (double v : p.a) f += v * v;
    CHECK(f < prev);
    prev = f;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("init is seed-stable and respects fan-in bounds") {
  Rng a(7), b(7);
  Mlp2 n1 = Mlp2::init(5, 16, 3, a);
  Mlp2 n2 = Mlp2::init(5, 16, 3, b);
  CHECK(frobenius_norm(n1.w1 - n2.w1) == 0.0);
  CHECK(frobenius_norm(n1.w2 - n2.w2) == 0.0);
  CHECK(max_abs(n1.w1) <= 1.0 / std::sqrt(5.0));
  CHECK(max_abs(n1.w2) <= 1.0 / std::sqrt(16.0));
}

}  // TEST_SUITE
