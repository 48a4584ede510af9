#include "ccm/dynamics.hpp"

#include <cmath>
#include <memory>

#include "ccm/diffnet.hpp"

namespace ccm {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec box_like(std::initializer_list<double> v) { return Vec(v); }

}  // namespace

Vec Box::center() const {
  Vec c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

Vec Box::halfwidth() const {
  Vec h(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) h[i] = 0.5 * (hi[i] - lo[i]);
  return h;
}

bool Box::contains(const Vec& x, double enlarge) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const double c = 0.5 * (lo[i] + hi[i]);
    const double h = 0.5 * (hi[i] - lo[i]);
    if (std::fabs(x[i] - c) > enlarge * h + 1e-9) return false;
  }
  return true;
}

Vec sample_box(const Box& box, Rng& rng) {
  Vec x(box.lo.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
  return x;
}

std::vector<Vec> sample_uniform(const Box& box, int count, Rng& rng) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_box(box, rng));
  return out;
}

DynamicsEval eval_dynamics(const SystemModel& sys, const Vec& x, const Vec& u) {
  if (static_cast<int>(x.size()) != sys.n) throw ContractViolation("eval_dynamics: state size mismatch");
  if (static_cast<int>(u.size()) != sys.m) throw ContractViolation("eval_dynamics: control size mismatch");
  DynamicsEval ev;
  ev.f = sys.f(x);
  ev.b = sys.b(x);
  ev.dfdx = sys.dfdx(x);
  ev.dbdx = sys.dbdx(x);
  ev.xdot = ev.f;
  vec_axpy(1.0, mat_vec(ev.b, u), ev.xdot);

  for (double v : ev.xdot)
    if (!std::isfinite(v)) throw NumericDomain("eval_dynamics: non-finite dynamics for " + sys.name);
  if (!all_finite(ev.dfdx) || !all_finite(ev.b))
    throw NumericDomain("eval_dynamics: non-finite derivatives for " + sys.name);
  for (const Mat& d : ev.dbdx)
    if (!all_finite(d)) throw NumericDomain("eval_dynamics: non-finite derivatives for " + sys.name);
  return ev;
}

Mat annihilator(const SystemModel& sys, const Vec& x) {
  if (sys.sparse_input) {
    Mat e1(sys.n, sys.n - sys.m);
    for (int i = 0; i < sys.n - sys.m; ++i) e1(i, i) = 1.0;
    return e1;
  }
  return null_space_basis(sys.b(x));
}

namespace {

std::vector<Mat> const_dbdx(int n, int m) { return std::vector<Mat>(static_cast<std::size_t>(m), Mat(n, n)); }

SystemModel make_dubins() {
  SystemModel s;
  s.name = "dubins";
  s.n = 4;
  s.m = 2;
  s.f = [](const Vec& x) { return Vec{x[3] * std::cos(x[2]), x[3] * std::sin(x[2]), 0.0, 0.0}; };
  Mat b(4, 2);
  b(2, 0) = 1.0;
  b(3, 1) = 1.0;
  s.b = [b](const Vec&) { return b; };
  s.dfdx = [](const Vec& x) {
    Mat j(4, 4);
    j(0, 2) = -x[3] * std::sin(x[2]);
    j(0, 3) = std::cos(x[2]);
    j(1, 2) = x[3] * std::cos(x[2]);
    j(1, 3) = std::sin(x[2]);
    return j;
  };
  s.dbdx = [](const Vec&) { return const_dbdx(4, 2); };
  s.state_box = {box_like({-5, -5, -kPi, 1}), box_like({5, 5, kPi, 2})};
  s.control_box = {box_like({-1, 0}), box_like({1, 0})};
  s.init_box = {box_like({-2, -2, -1, 1.5}), box_like({2, 2, 1, 1.5})};
  s.err_box = {box_like({-1, -1, -1, -1}), box_like({1, 1, 1, 1})};
  s.sparse_input = true;
  s.default_rate = 1.0;
  return s;
}

SystemModel make_pvtol() {
  SystemModel s;
  s.name = "pvtol";
  s.n = 6;
  s.m = 2;
  const double mass = 0.486, inertia = 0.00383, grav = 9.81, arm = 0.25;
  s.f = [grav](const Vec& x) {
    const double phi = x[2], vx = x[3], vz = x[4], om = x[5];
    return Vec{vx * std::cos(phi) - vz * std::sin(phi),
               vx * std::sin(phi) + vz * std::cos(phi),
               om,
               vz * om - grav * std::sin(phi),
               -vx * om - grav * std::cos(phi),
               0.0};
  };
  Mat b(6, 2);
  b(4, 0) = 1.0 / mass;
  b(4, 1) = 1.0 / mass;
  b(5, 0) = arm / inertia;
  b(5, 1) = -arm / inertia;
  s.b = [b](const Vec&) { return b; };
  s.dfdx = [grav](const Vec& x) {
    const double phi = x[2], vx = x[3], vz = x[4], om = x[5];
    const double cp = std::cos(phi), sp = std::sin(phi);
    Mat j(6, 6);
    j(0, 2) = -vx * sp - vz * cp;
    j(0, 3) = cp;
    j(0, 4) = -sp;
    j(1, 2) = vx * cp - vz * sp;
    j(1, 3) = sp;
    j(1, 4) = cp;
    j(2, 5) = 1.0;
    j(3, 2) = -grav * cp;
    j(3, 4) = om;
    j(3, 5) = vz;
    j(4, 2) = grav * sp;
    j(4, 3) = -om;
    j(4, 5) = -vx;
    return j;
  };
  s.dbdx = [](const Vec&) { return const_dbdx(6, 2); };
  const double hover = mass * grav / 2.0;
  s.state_box = {box_like({-35, -2, -kPi / 3, -2, -1, -kPi / 3}),
                 box_like({0, 2, kPi / 3, 2, 1, kPi / 3})};
  s.control_box = {box_like({hover - 1, hover - 1}), box_like({hover + 1, hover + 1})};
  s.init_box = {box_like({0, 0, -0.1, 0.5, 0, 0}), box_like({0, 0, 0.1, 1, 0, 0})};
  s.err_box = {Vec(6, -0.5), Vec(6, 0.5)};
  s.sparse_input = true;
  return s;
}

SystemModel make_quadrotor() {
  SystemModel s;
  s.name = "quadrotor";
  s.n = 10;
  s.m = 4;
  const double grav = 9.81;
  s.f = [grav](const Vec& x) {
    const double th = x[6], phi = x[7], theta = x[8];
    Vec f(10, 0.0);
    f[0] = x[3];
    f[1] = x[4];
    f[2] = x[5];
    f[3] = -th * std::sin(theta);
    f[4] = th * std::cos(theta) * std::sin(phi);
    f[5] = grav - th * std::cos(theta) * std::cos(phi);
    return f;
  };
  Mat b(10, 4);
  for (int j = 0; j < 4; ++j) b(6 + j, j) = 1.0;
  s.b = [b](const Vec&) { return b; };
  s.dfdx = [](const Vec& x) {
    const double th = x[6], phi = x[7], theta = x[8];
    const double cth = std::cos(theta), sth = std::sin(theta);
    const double cph = std::cos(phi), sph = std::sin(phi);
    Mat j(10, 10);
    j(0, 3) = 1.0;
    j(1, 4) = 1.0;
    j(2, 5) = 1.0;
    j(3, 6) = -sth;
    j(3, 8) = -th * cth;
    j(4, 6) = cth * sph;
    j(4, 7) = th * cth * cph;
    j(4, 8) = -th * sth * sph;
    j(5, 6) = -cth * cph;
    j(5, 7) = th * cth * sph;
    j(5, 8) = th * sth * cph;
    return j;
  };
  s.dbdx = [](const Vec&) { return const_dbdx(10, 4); };
  s.state_box = {box_like({-30, -30, -30, -1.5, -1.5, -1.5, 0.5 * grav, -kPi / 3, -kPi / 3, -kPi / 3}),
                 box_like({30, 30, 30, 1.5, 1.5, 1.5, 2 * grav, kPi / 3, kPi / 3, kPi / 3})};
  s.control_box = {Vec(4, -1.0), Vec(4, 1.0)};
  s.init_box = {box_like({-5, -5, -5, -1, -1, -1, grav, 0, 0, 0}),
                box_like({5, 5, 5, 1, 1, 1, grav, 0, 0, 0})};
  s.err_box = {Vec(10, -0.5), Vec(10, 0.5)};
  s.sparse_input = true;
  return s;
}

SystemModel make_neural_lander(std::uint64_t residual_seed) {
  SystemModel s;
  s.name = "neural_lander";
  s.n = 6;
  s.m = 3;
  const double mass = 1.47, grav = 9.81;

  // Stand-in for the learned ground-effect force: a fixed randomly
  // initialized network of the same input signature (z, vx, vy, vz),
  // squashed through a*tanh(r/a) so forces and slopes stay bounded.
  // The vertical channel rides on a positive height-fading lift term,
  // keeping hover reachable inside the control box everywhere in X.
  Rng rng(residual_seed ^ 0xccf00du);
  auto net = std::make_shared<Mlp2>(Mlp2::init(4, 32, 3, rng));
  const Vec squash = {3.0, 3.0, 1.2};
  auto fa = [net, squash](const Vec& x) {
    Vec in = {x[2], x[3], x[4], x[5]};
    Vec raw = mlp2_forward(*net, in);
    for (std::size_t i = 0; i < raw.size(); ++i)
      raw[i] = squash[i] * std::tanh(raw[i] / squash[i]);
    raw[2] += 3.8 - 0.5 * x[2];
    return raw;
  };
  auto fa_jac = [net, squash](const Vec& x) {  // 3 x 4 over (z, vx, vy, vz)
    Vec in = {x[2], x[3], x[4], x[5]};
    Vec raw = mlp2_forward(*net, in);
    Mat j = mlp2_input_jacobian(*net, in);
    for (int i = 0; i < 3; ++i) {
      const double t = std::tanh(raw[static_cast<std::size_t>(i)] / squash[static_cast<std::size_t>(i)]);
      const double g = 1.0 - t * t;
      for (int k = 0; k < 4; ++k) j(i, k) *= g;
    }
    j(2, 0) += -0.5;
    return j;
  };

  s.f = [fa, mass, grav](const Vec& x) {
    Vec force = fa(x);
    return Vec{x[3], x[4], x[5], force[0] / mass, force[1] / mass, force[2] / mass - grav};
  };
  Mat b(6, 3);
  for (int j = 0; j < 3; ++j) b(3 + j, j) = 1.0;
  s.b = [b](const Vec&) { return b; };
  s.dfdx = [fa_jac, mass](const Vec& x) {
    Mat j(6, 6);
    j(0, 3) = 1.0;
    j(1, 4) = 1.0;
    j(2, 5) = 1.0;
    Mat dj = fa_jac(x);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 4; ++k) j(3 + i, 2 + k) = dj(i, k) / mass;
    return j;
  };
  s.dbdx = [](const Vec&) { return const_dbdx(6, 3); };
  s.state_box = {box_like({-5, -5, 0, -1, -1, -1}), box_like({5, 5, 2, 1, 1, 1})};
  s.control_box = {box_like({-1, -1, -3}), box_like({1, 1, 9})};
  s.init_box = {box_like({-3, -3, 0.5, 1, 0, 0}), box_like({3, 3, 1, 1, 0, 0})};
  s.err_box = {box_like({-1, -1, -0.4, -1, -1, 0}), box_like({1, 1, 1, 1, 1, 0})};
  s.sparse_input = true;
  return s;
}

SystemModel make_segway() {
  SystemModel s;
  s.name = "segway";
  s.n = 4;
  s.m = 1;
  // state [p, theta, v, omega]; drift keeps the u = 0 part of the published
  // expressions, the u coefficients form B.
  s.f = [](const Vec& x) {
    const double th = x[1], v = x[2], om = x[3];
    const double ct = std::cos(th), st = std::sin(th);
    const double d1 = ct - 24.7;
    const double d2 = ct * ct - 24.7;
    const double n3 = ct * (9.8 * st + 11.5 * v) + 68.4 * v - 1.2 * om * om * st;
    const double n4 = -58.8 * v * ct - 243.5 * v - st * (208.3 + om * om * ct);
    return Vec{v, om, n3 / d1, n4 / d2};
  };
  s.b = [](const Vec& x) {
    const double th = x[1];
    const double ct = std::cos(th);
    Mat b(4, 1);
    b(2, 0) = (-1.8 * ct - 10.9) / (ct - 24.7);
    b(3, 0) = (9.3 * ct + 38.6) / (ct * ct - 24.7);
    return b;
  };
  s.dfdx = [](const Vec& x) {
    const double th = x[1], v = x[2], om = x[3];
    const double ct = std::cos(th), st = std::sin(th);
    const double d1 = ct - 24.7, d2 = ct * ct - 24.7;
    const double n3 = ct * (9.8 * st + 11.5 * v) + 68.4 * v - 1.2 * om * om * st;
    const double n4 = -58.8 * v * ct - 243.5 * v - st * (208.3 + om * om * ct);
    const double dn3_th = -st * (9.8 * st + 11.5 * v) + ct * 9.8 * ct - 1.2 * om * om * ct;
    const double dn4_th = 58.8 * v * st - 208.3 * ct - om * om * (ct * ct - st * st);
    Mat j(4, 4);
    j(0, 2) = 1.0;
    j(1, 3) = 1.0;
    j(2, 1) = (dn3_th * d1 + n3 * st) / (d1 * d1);
    j(2, 2) = (11.5 * ct + 68.4) / d1;
    j(2, 3) = -2.4 * om * st / d1;
    j(3, 1) = (dn4_th * d2 + n4 * 2.0 * ct * st) / (d2 * d2);
    j(3, 2) = (-58.8 * ct - 243.5) / d2;
    j(3, 3) = -2.0 * om * st * ct / d2;
    return j;
  };
  s.dbdx = [](const Vec& x) {
    const double th = x[1];
    const double ct = std::cos(th), st = std::sin(th);
    const double d1 = ct - 24.7, d2 = ct * ct - 24.7;
    std::vector<Mat> d(1, Mat(4, 4));
    d[0](2, 1) = (1.8 * st * d1 + (-1.8 * ct - 10.9) * st) / (d1 * d1);
    d[0](3, 1) = (-9.3 * st * d2 + (9.3 * ct + 38.6) * 2.0 * ct * st) / (d2 * d2);
    return d;
  };
  s.state_box = {box_like({-5, -kPi / 3, -1, -kPi}), box_like({5, kPi / 3, 1, kPi})};
  s.control_box = {box_like({0}), box_like({0})};
  s.init_box = {Vec(4, 0.0), Vec(4, 0.0)};
  s.err_box = {box_like({-1, -kPi / 3, -0.5, -kPi}), box_like({1, kPi / 3, 0.5, kPi})};
  s.sparse_input = false;  // B drives both v and omega rows
  return s;
}

SystemModel make_cartpole() {
  SystemModel s;
  s.name = "cartpole";
  s.n = 4;
  s.m = 1;
  const double mc = 1.0, mp = 1.0, grav = 9.8, pole = 1.0;
  s.f = [=](const Vec& x) {
    const double th = x[1], om = x[3];
    const double ct = std::cos(th), st = std::sin(th);
    const double den = mc + mp * st * st;
    const double f3 = mp * st * (pole * om * om - grav * ct) / den;
    const double f4 = (mp * pole * om * om * ct * st - (mc + mp) * grav * st) / (pole * den);
    return Vec{x[2], om, f3, f4};
  };
  s.b = [=](const Vec& x) {
    const double th = x[1];
    const double ct = std::cos(th), st = std::sin(th);
    const double den = mc + mp * st * st;
    Mat b(4, 1);
    b(2, 0) = 1.0 / den;
    b(3, 0) = ct / (pole * den);
    return b;
  };
  s.dfdx = [=](const Vec& x) {
    const double th = x[1], om = x[3];
    const double ct = std::cos(th), st = std::sin(th);
    const double den = mc + mp * st * st;
    const double dden = 2.0 * mp * st * ct;
    const double n3 = mp * st * (pole * om * om - grav * ct);
    const double dn3_th = mp * ct * (pole * om * om - grav * ct) + mp * st * grav * st;
    const double n4 = mp * pole * om * om * ct * st - (mc + mp) * grav * st;
    const double dn4_th = mp * pole * om * om * (ct * ct - st * st) - (mc + mp) * grav * ct;
    Mat j(4, 4);
    j(0, 2) = 1.0;
    j(1, 3) = 1.0;
    j(2, 1) = (dn3_th * den - n3 * dden) / (den * den);
    j(2, 3) = 2.0 * mp * pole * om * st / den;
    j(3, 1) = (dn4_th * den - n4 * dden) / (pole * den * den);
    j(3, 3) = 2.0 * mp * om * ct * st / den;
    return j;
  };
  s.dbdx = [=](const Vec& x) {
    const double th = x[1];
    const double ct = std::cos(th), st = std::sin(th);
    const double den = mc + mp * st * st;
    const double dden = 2.0 * mp * st * ct;
    std::vector<Mat> d(1, Mat(4, 4));
    d[0](2, 1) = -dden / (den * den);
    d[0](3, 1) = (-st * den - ct * dden) / (pole * den * den);
    return d;
  };
  s.state_box = {box_like({-5, -kPi / 3, -1, -1}), box_like({5, kPi / 3, 1, 1})};
  s.control_box = {box_like({0}), box_like({0})};
  s.init_box = {Vec(4, 0.0), Vec(4, 0.0)};
  s.err_box = {Vec(4, -0.3), Vec(4, 0.3)};
  s.sparse_input = false;
  return s;
}

SystemModel make_pendulum() {
  SystemModel s;
  s.name = "pendulum";
  s.n = 2;
  s.m = 1;
  const double mass = 0.15, pole = 0.5, grav = 9.81;
  const double inertia = mass * pole * pole;
  s.f = [=](const Vec& x) {
    return Vec{x[1], (mass * grav * pole * std::sin(x[0]) - 0.1 * x[1]) / inertia};
  };
  Mat b(2, 1);
  b(1, 0) = 1.0 / inertia;
  s.b = [b](const Vec&) { return b; };
  s.dfdx = [=](const Vec& x) {
    Mat j(2, 2);
    j(0, 1) = 1.0;
    j(1, 0) = mass * grav * pole * std::cos(x[0]) / inertia;
    j(1, 1) = -0.1 / inertia;
    return j;
  };
  s.dbdx = [](const Vec&) { return const_dbdx(2, 1); };
  s.state_box = {Vec(2, -kPi / 3), Vec(2, kPi / 3)};
  s.control_box = {box_like({-1}), box_like({1})};
  s.init_box = {Vec(2, 0.0), Vec(2, 0.0)};
  s.err_box = {Vec(2, -kPi / 4), Vec(2, kPi / 4)};
  s.sparse_input = true;
  s.default_rate = 3.0;
  return s;
}

SystemModel make_quadrotor2() {
  SystemModel s;
  s.name = "quadrotor2";
  s.n = 10;
  s.m = 3;
  const double d0 = 10.0, d1 = 8.0, n0 = 10.0, kt = 0.91, grav = 9.81;
  // state [px, py, pz, vx, vy, tx, ty, wx, wy, vz]
  s.f = [=](const Vec& x) {
    Vec f(10, 0.0);
    f[0] = x[3];
    f[1] = x[4];
    f[2] = x[9];
    f[3] = grav * std::tan(x[5]);
    f[4] = grav * std::tan(x[6]);
    f[5] = -d1 * x[5] + x[7];
    f[6] = -d1 * x[6] + x[8];
    f[7] = -d0 * x[5];
    f[8] = -d0 * x[6];
    f[9] = -grav;
    return f;
  };
  Mat b(10, 3);
  b(7, 0) = n0;
  b(8, 1) = n0;
  b(9, 2) = kt;
  s.b = [b](const Vec&) { return b; };
  s.dfdx = [=](const Vec& x) {
    Mat j(10, 10);
    j(0, 3) = 1.0;
    j(1, 4) = 1.0;
    j(2, 9) = 1.0;
    const double cx = std::cos(x[5]), cy = std::cos(x[6]);
    j(3, 5) = grav / (cx * cx);
    j(4, 6) = grav / (cy * cy);
    j(5, 5) = -d1;
    j(5, 7) = 1.0;
    j(6, 6) = -d1;
    j(6, 8) = 1.0;
    j(7, 5) = -d0;
    j(8, 6) = -d0;
    return j;
  };
  s.dbdx = [](const Vec&) { return const_dbdx(10, 3); };
  s.state_box = {box_like({-15, -15, -15, -2, -2, -kPi / 3, -kPi / 3, -kPi / 3, -kPi / 3, -2}),
                 box_like({15, 15, 15, 2, 2, kPi / 3, kPi / 3, kPi / 3, kPi / 3, 2})};
  s.control_box = {box_like({-10, -10, 0}), box_like({10, 10, 1.5 * grav})};
  s.init_box = {box_like({-2, -2, -2, -1, -1, -0.5, -0.5, -0.5, -0.5, -1}),
                box_like({2, 2, 2, 1, 1, 0.5, 0.5, 0.5, 0.5, 1})};
  s.err_box = {Vec(10, -0.5), Vec(10, 0.5)};
  s.sparse_input = true;
  return s;
}

SystemModel make_tlpra() {
  SystemModel s;
  s.name = "tlpra";
  s.n = 4;
  s.m = 2;
  const double alpha = 3.1, beta = 2.3, eta = 2.3, e1 = 9.8;

  auto h_inv = [=](double q2) {
    const double c2 = std::cos(q2);
    const double det = alpha * beta - eta * eta * c2 * c2;  // >= 1.84, never singular
    Mat hi(2, 2);
    hi(0, 0) = beta / det;
    hi(0, 1) = -(beta + eta * c2) / det;
    hi(1, 0) = hi(0, 1);
    hi(1, 1) = (alpha + beta + 2.0 * eta * c2) / det;
    return hi;
  };
  auto dh_inv = [=](double q2) {  // d(H^-1)/dq2 = -H^-1 dH H^-1
    const double s2 = std::sin(q2);
    Mat dh(2, 2);
    dh(0, 0) = -2.0 * eta * s2;
    dh(0, 1) = -eta * s2;
    dh(1, 0) = -eta * s2;
    Mat hi = h_inv(q2);
    return -1.0 * (hi * dh * hi);
  };
  auto coriolis = [=](const Vec& x) {
    const double q1 = x[0], q2 = x[1], qd1 = x[2], qd2 = x[3];
    const double s2 = std::sin(q2), c12 = std::cos(q1 + q2);
    return Vec{eta * (2.0 * qd1 * qd2 + qd2 * qd2) * s2 - alpha * e1 * std::cos(q1) - eta * e1 * c12,
               -eta * qd1 * qd1 * s2 - eta * e1 * c12};
  };
  auto dc_dx = [=](const Vec& x) {  // 2 x 4
    const double q1 = x[0], q2 = x[1], qd1 = x[2], qd2 = x[3];
    const double s2 = std::sin(q2), c2 = std::cos(q2), s12 = std::sin(q1 + q2);
    Mat d(2, 4);
    d(0, 0) = alpha * e1 * std::sin(q1) + eta * e1 * s12;
    d(0, 1) = eta * (2.0 * qd1 * qd2 + qd2 * qd2) * c2 + eta * e1 * s12;
    d(0, 2) = 2.0 * eta * qd2 * s2;
    d(0, 3) = eta * (2.0 * qd1 + 2.0 * qd2) * s2;
    d(1, 0) = eta * e1 * s12;
    d(1, 1) = -eta * qd1 * qd1 * c2 + eta * e1 * s12;
    d(1, 2) = -2.0 * eta * qd1 * s2;
    return d;
  };

  s.f = [=](const Vec& x) {
    Vec acc = mat_vec(h_inv(x[1]), coriolis(x));
    return Vec{x[2], x[3], acc[0], acc[1]};
  };
  s.b = [=](const Vec& x) {
    Mat hi = h_inv(x[1]);
    Mat b(4, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) b(2 + i, j) = hi(i, j);
    return b;
  };
  s.dfdx = [=](const Vec& x) {
    Mat hi = h_inv(x[1]);
    Mat dacc = hi * dc_dx(x);           // columns: d(H^-1 c)/dx via c only
    Vec extra = mat_vec(dh_inv(x[1]), coriolis(x));  // q2 column correction
    Mat j(4, 4);
    j(0, 2) = 1.0;
    j(1, 3) = 1.0;
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 4; ++k) j(2 + i, k) = dacc(i, k);
      j(2 + i, 1) += extra[static_cast<std::size_t>(i)];
    }
    return j;
  };
  s.dbdx = [=](const Vec& x) {
    Mat dhi = dh_inv(x[1]);
    std::vector<Mat> d(2, Mat(4, 4));
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) d[static_cast<std::size_t>(j)](2 + i, 1) = dhi(i, j);
    return d;
  };
  s.state_box = {box_like({-kPi / 2, -kPi / 2, -kPi / 3, -kPi / 3}),
                 box_like({kPi / 2, kPi / 2, kPi / 3, kPi / 3})};
  s.control_box = {box_like({0, 0}), box_like({0, 0})};
  s.init_box = {box_like({kPi / 2, 0, 0, 0}), box_like({kPi / 2, 0, 0, 0})};
  s.err_box = {box_like({-0.3, -0.3, 0, 0}), box_like({0.3, 0.3, 0, 0})};
  s.sparse_input = true;
  s.default_rate = 2.0;
  return s;
}

}  // namespace

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = {
      "dubins",  "pvtol",    "quadrotor", "neural_lander", "segway",
      "cartpole", "pendulum", "quadrotor2", "tlpra"};
  return names;
}

SystemModel make_benchmark(const std::string& name, std::uint64_t residual_seed) {
  if (name == "dubins") return make_dubins();
  if (name == "pvtol") return make_pvtol();
  if (name == "quadrotor") return make_quadrotor();
  if (name == "neural_lander") return make_neural_lander(residual_seed);
  if (name == "segway") return make_segway();
  if (name == "cartpole") return make_cartpole();
  if (name == "pendulum") return make_pendulum();
  if (name == "quadrotor2") return make_quadrotor2();
  if (name == "tlpra") return make_tlpra();
  throw ContractViolation("make_benchmark: unknown system '" + name + "'");
}

}  // namespace ccm
