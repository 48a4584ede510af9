#include "ccm/certloss.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "ccm/errors.hpp"

namespace ccm {

namespace {

Vec head(const Vec& x, int k) { return Vec(x.begin(), x.begin() + k); }

// 1.0 on the last m columns, 0.0 elsewhere.
Mat keep_right_mask(int n, int m) {
  Mat mask(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = n - m; c < n; ++c) mask(r, c) = 1.0;
  return mask;
}

// [I; 0], n x sub.
Mat embed_top(int n, int sub) {
  Mat e(n, sub);
  for (int i = 0; i < sub; ++i) e(i, i) = 1.0;
  return e;
}

Mat unit_col(int k, int j) {
  Mat e(k, 1);
  e(j, 0) = 1.0;
  return e;
}

Mat unit_row(int k, int i) {
  Mat e(1, k);
  e(0, i) = 1.0;
  return e;
}

// [I; 0] selecting the first n of 2n input coordinates.
Mat first_arg_selector(int n) { return embed_top(2 * n, n); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace

MetricNet MetricNet::init(int n, int m, bool masked, int hidden, Rng& rng) {
  require(n >= 1 && hidden >= 1, "MetricNet::init: bad dimensions");
  if (masked) require(m >= 1 && m < n, "MetricNet::init: mask needs 0 < m < n");
  MetricNet mn;
  mn.n = n;
  mn.m = m;
  mn.masked = masked;
  mn.c_main = Mlp2::init(n, hidden, n * n, rng);
  if (masked) {
    const int sub = n - m;
    mn.c_bot = Mlp2::init(sub, hidden, sub * sub, rng);
  }
  return mn;
}

Mat metric_factor(const MetricNet& mn, const Vec& x) {
  const int n = mn.n;
  require(static_cast<int>(x.size()) == n, "metric_factor: state dimension mismatch");
  Mat c(n, n, mlp2_forward(mn.c_main, x));
  if (mn.masked) {
    const int sub = n - mn.m;
    const Vec bot = mlp2_forward(mn.c_bot, head(x, sub));
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < sub; ++col) c(r, col) = 0.0;
    for (int r = 0; r < sub; ++r)
      for (int col = 0; col < sub; ++col) c(r, col) = bot[static_cast<std::size_t>(r) * sub + col];
  }
  return c;
}

Mat dual_metric(const MetricNet& mn, const Vec& x) {
  const Mat c = metric_factor(mn, x);
  return transpose(c) * c + mn.w_floor * Mat::identity(mn.n);
}

std::vector<Mat> dual_metric_grad(const MetricNet& mn, const Vec& x) {
  const int n = mn.n;
  const int sub = n - mn.m;
  const Mat c = metric_factor(mn, x);
  const Mat j_main = mlp2_input_jacobian(mn.c_main, x);
  Mat j_bot;
  if (mn.masked) j_bot = mlp2_input_jacobian(mn.c_bot, head(x, sub));

  std::vector<Mat> dw;
  dw.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Mat dc(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) dc(r, col) = j_main(r * n + col, i);
    if (mn.masked) {
      for (int r = 0; r < n; ++r)
        for (int col = 0; col < sub; ++col) dc(r, col) = 0.0;
      if (i < sub) {
        for (int r = 0; r < sub; ++r)
          for (int col = 0; col < sub; ++col) dc(r, col) = j_bot(r * sub + col, i);
      }
    }
    dw.push_back(transpose(dc) * c + transpose(c) * dc);
  }
  return dw;
}

ControllerNet ControllerNet::init(Arch arch, int n, int m, int hidden, int bottleneck, Rng& rng) {
  require(n >= 1 && m >= 1 && hidden >= 1, "ControllerNet::init: bad dimensions");
  ControllerNet cn;
  cn.arch = arch;
  cn.n = n;
  cn.m = m;
  cn.bottleneck = bottleneck;
  if (arch == Arch::kBottleneck) {
    require(bottleneck >= 1, "ControllerNet::init: bad bottleneck width");
    cn.net_a = Mlp2::init(2 * n, hidden, bottleneck * n, rng);
    cn.net_b = Mlp2::init(2 * n, hidden, m * bottleneck, rng);
  } else {
    cn.net_a = Mlp2::init(2 * n, hidden, m * n, rng);
  }
  return cn;
}

ControlEval eval_controller(const ControllerNet& cn, const Vec& x, const Vec& xs, const Vec& us) {
  const int n = cn.n;
  const int m = cn.m;
  require(static_cast<int>(x.size()) == n && static_cast<int>(xs.size()) == n,
          "eval_controller: state dimension mismatch");
  require(static_cast<int>(us.size()) == m, "eval_controller: control dimension mismatch");

  const Vec z = concat(x, xs);
  const Vec xe = vec_sub(x, xs);
  ControlEval out;
  out.k = Mat(m, n);

  if (cn.arch == ControllerNet::Arch::kSimple) {
    const Mat k0(m, n, mlp2_forward(cn.net_a, z));
    out.u = vec_add(mat_vec(k0, xe), us);
    const Mat j = mlp2_input_jacobian(cn.net_a, z);
    for (int col = 0; col < n; ++col) {
      // d u / d x_col = D_col xe + k0 e_col, with D_col the derivative of the
      // gain matrix in the direction of the first argument.
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int c2 = 0; c2 < n; ++c2) acc += j(r * n + c2, col) * xe[static_cast<std::size_t>(c2)];
        out.k(r, col) = acc + k0(r, col);
      }
    }
    return out;
  }

  const int c = cn.bottleneck;
  const Mat w1(c, n, mlp2_forward(cn.net_a, z));
  const Mat w2(m, c, mlp2_forward(cn.net_b, z));
  const Vec z2 = mat_vec(w1, xe);
  Vec h(z2.size()), dt(z2.size());
  for (std::size_t i = 0; i < z2.size(); ++i) {
    h[i] = std::tanh(z2[i]);
    dt[i] = 1.0 - h[i] * h[i];
  }
  out.u = vec_add(mat_vec(w2, h), us);

  const Mat ja = mlp2_input_jacobian(cn.net_a, z);
  const Mat jb = mlp2_input_jacobian(cn.net_b, z);
  for (int col = 0; col < n; ++col) {
    Vec inner(static_cast<std::size_t>(c));
    for (int r = 0; r < c; ++r) {
      double acc = 0.0;
      for (int c2 = 0; c2 < n; ++c2) acc += ja(r * n + c2, col) * xe[static_cast<std::size_t>(c2)];
      inner[static_cast<std::size_t>(r)] = acc + w1(r, col);
    }
    for (int r = 0; r < m; ++r) {
      double acc = 0.0;
      for (int c2 = 0; c2 < c; ++c2) acc += jb(r * c + c2, col) * h[static_cast<std::size_t>(c2)];
      double acc2 = 0.0;
      for (int c2 = 0; c2 < c; ++c2)
        acc2 += w2(r, c2) * (dt[static_cast<std::size_t>(c2)] * inner[static_cast<std::size_t>(c2)]);
      out.k(r, col) = acc + acc2;
    }
  }
  return out;
}

Mat generalized_jacobian(const DynamicsEval& ev, const Vec& u) {
  require(u.size() == ev.dbdx.size(), "generalized_jacobian: control dimension mismatch");
  Mat a = ev.dfdx;
  for (std::size_t j = 0; j < u.size(); ++j) a = a + u[j] * ev.dbdx[j];
  return a;
}

Mat generalized_jacobian(const SystemModel& sys, const Vec& x, const Vec& u) {
  return generalized_jacobian(eval_dynamics(sys, x, u), u);
}

Mat contraction_matrix_dual(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                            double rate, const Vec& x, const Vec& xs, const Vec& us) {
  const ControlEval ctrl = eval_controller(cn, x, xs, us);
  const DynamicsEval ev = eval_dynamics(sys, x, ctrl.u);
  const Mat a = generalized_jacobian(ev, ctrl.u);
  const Mat w = dual_metric(mn, x);
  const std::vector<Mat> dw = dual_metric_grad(mn, x);

  const Vec xdot = vec_add(ev.f, mat_vec(ev.b, ctrl.u));
  Mat wdot = xdot[0] * dw[0];
  for (int i = 1; i < sys.n; ++i) wdot = wdot + xdot[static_cast<std::size_t>(i)] * dw[i];

  const Mat abk = a + ev.b * ctrl.k;
  const Mat p = abk * w;
  return ((p + transpose(p)) - wdot) + (2.0 * rate) * w;
}

Mat contraction_matrix_primal(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                              double rate, const Vec& x, const Vec& xs, const Vec& us) {
  const ControlEval ctrl = eval_controller(cn, x, xs, us);
  const DynamicsEval ev = eval_dynamics(sys, x, ctrl.u);
  const Mat a = generalized_jacobian(ev, ctrl.u);
  const Mat w = dual_metric(mn, x);
  const std::vector<Mat> dw = dual_metric_grad(mn, x);

  Mat metric;
  try {
    metric = inverse(w);
  } catch (const SingularMatrix&) {
    throw SingularMatrix("contraction_matrix_primal: dual metric not invertible");
  }
  // W is symmetric, so M is too; symmetrize away inversion round-off.
  metric = 0.5 * (metric + transpose(metric));

  const Vec xdot = vec_add(ev.f, mat_vec(ev.b, ctrl.u));
  Mat wdot = xdot[0] * dw[0];
  for (int i = 1; i < sys.n; ++i) wdot = wdot + xdot[static_cast<std::size_t>(i)] * dw[i];
  Mat mdot = -1.0 * (metric * wdot * metric);
  mdot = 0.5 * (mdot + transpose(mdot));

  const Mat abk = a + ev.b * ctrl.k;
  const Mat p = metric * abk;
  return (mdot + (p + transpose(p))) + (2.0 * rate) * metric;
}

Mat ccm_condition_c1(const SystemModel& sys, const MetricNet& mn, double rate, const Vec& x) {
  const DynamicsEval ev = eval_dynamics(sys, x, Vec(static_cast<std::size_t>(sys.m), 0.0));
  const Mat w = dual_metric(mn, x);
  const std::vector<Mat> dw = dual_metric_grad(mn, x);

  const Mat p = ev.dfdx * w;
  const Mat hat = p + transpose(p);
  Mat dfw = ev.f[0] * dw[0];
  for (int i = 1; i < sys.n; ++i) dfw = dfw + ev.f[static_cast<std::size_t>(i)] * dw[i];

  const Mat inner = (hat - dfw) + (2.0 * rate) * w;
  const Mat bp = annihilator(sys, x);
  return (transpose(bp) * inner) * bp;
}

Mat ccm_condition_c2(const SystemModel& sys, const MetricNet& mn, const Vec& x, int j) {
  require(j >= 0 && j < sys.m, "ccm_condition_c2: control index out of range");
  const DynamicsEval ev = eval_dynamics(sys, x, Vec(static_cast<std::size_t>(sys.m), 0.0));
  const std::vector<Mat> dw = dual_metric_grad(mn, x);
  const Mat w = dual_metric(mn, x);

  Mat dbw = ev.b(0, j) * dw[0];
  for (int i = 1; i < sys.n; ++i) dbw = dbw + ev.b(i, j) * dw[i];
  const Mat p = ev.dbdx[static_cast<std::size_t>(j)] * w;
  const Mat inner = dbw - (p + transpose(p));
  const Mat bp = annihilator(sys, x);
  return (transpose(bp) * inner) * bp;
}

double l_pd(const Mat& a, const std::vector<Vec>& probes, double margin) {
  require(a.rows == a.cols, "l_pd: matrix not square");
  require(!probes.empty(), "l_pd: no probe vectors");
  double s = 0.0;
  for (const Vec& p : probes) {
    require(static_cast<int>(p.size()) == a.rows, "l_pd: probe dimension mismatch");
    double q = 0.0;
    for (int i = 0; i < a.rows; ++i) {
      double row = 0.0;
      for (int j = 0; j < a.cols; ++j) row += a(i, j) * p[static_cast<std::size_t>(j)];
      q += p[static_cast<std::size_t>(i)] * row;
    }
    const double h = margin - q;
    if (h > 0.0) s += h;
  }
  return s / static_cast<double>(probes.size());
}

ProbeSet ProbeSet::draw(int n, int n_sub, int count, Rng& rng) {
  require(n >= 1 && count >= 1, "ProbeSet::draw: bad arguments");
  ProbeSet ps;
  ps.dim_n.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ps.dim_n.push_back(rng.unit_vector(n));
  if (n_sub > 0) {
    ps.dim_sub.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) ps.dim_sub.push_back(rng.unit_vector(n_sub));
  }
  return ps;
}

LossTerms empirical_risk(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                         const LossConfig& cfg, const std::vector<Sample>& batch,
                         const ProbeSet& probes) {
  require(!batch.empty(), "empirical_risk: empty batch");
  const int sub = sys.n - sys.m;
  const bool structured = !cfg.drop_structured && sub > 0;
  if (structured) require(!probes.dim_sub.empty(), "empirical_risk: missing annihilator probes");

  LossTerms acc;
  for (const Sample& s : batch) {
    const Mat d = contraction_matrix_dual(sys, mn, cn, cfg.rate, s.x, s.xs, s.us);
    const double contraction = l_pd(-d, probes.dim_n, cfg.margin);
    double strong = 0.0, killing = 0.0;
    if (structured) {
      strong = l_pd(-ccm_condition_c1(sys, mn, cfg.rate, s.x), probes.dim_sub, cfg.margin);
      for (int j = 0; j < sys.m; ++j)
        killing += frobenius_norm(ccm_condition_c2(sys, mn, s.x, j));
    }
    const Mat w = dual_metric(mn, s.x);
    const double conditioning =
        l_pd(mn.w_ceil * Mat::identity(sys.n) - w, probes.dim_n, cfg.margin);

    double total = cfg.w_contraction * contraction;
    if (structured) {
      total += cfg.w_strong * strong;
      total += cfg.w_killing * killing;
    }
    total += cfg.w_conditioning * conditioning;

    acc.contraction += contraction;
    acc.strong += strong;
    acc.killing += killing;
    acc.conditioning += conditioning;
    acc.total += total;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  acc.contraction *= inv;
  acc.strong *= inv;
  acc.killing *= inv;
  acc.conditioning *= inv;
  acc.total *= inv;
  return acc;
}

void NetBundle::wire() {
  refs = ParamRefs{};
  s_main = register_mlp(refs, metric.c_main);
  s_bot = metric.masked ? register_mlp(refs, metric.c_bot) : MlpSlots{};
  s_a = register_mlp(refs, ctrl.net_a);
  s_b = (ctrl.arch == ControllerNet::Arch::kBottleneck) ? register_mlp(refs, ctrl.net_b)
                                                        : MlpSlots{};
}

void init_bundle(NetBundle& nets, const SystemModel& sys, ControllerNet::Arch arch, bool masked,
                 int hidden, int bottleneck, Rng& rng) {
  nets.metric = MetricNet::init(sys.n, sys.m, masked, hidden, rng);
  nets.ctrl = ControllerNet::init(arch, sys.n, sys.m, hidden, bottleneck, rng);
  nets.wire();
}

int build_sample_risk(Tape& t, const NetBundle& nets, const SystemModel& sys,
                      const LossConfig& cfg, const Sample& sample, const ProbeSet& probes,
                      RiskNodes* nodes) {
  const MetricNet& mn = nets.metric;
  const ControllerNet& cn = nets.ctrl;
  const int n = sys.n;
  const int m = sys.m;
  const int sub = n - m;
  require(mn.n == n && cn.n == n && cn.m == m, "build_sample_risk: network dimension mismatch");
  require(static_cast<int>(sample.x.size()) == n && static_cast<int>(sample.xs.size()) == n &&
              static_cast<int>(sample.us.size()) == m,
          "build_sample_risk: sample dimension mismatch");
  const bool structured = !cfg.drop_structured && sub > 0;
  require(!probes.dim_n.empty(), "build_sample_risk: no probe vectors");
  if (structured)
    require(!probes.dim_sub.empty(), "build_sample_risk: missing annihilator probes");

  // Metric factor and its per-axis derivative matrices.
  const int x_col = t.constant(Mat::col_vec(sample.x));
  int z_main = -1;
  const int main_out = tape_mlp_forward(t, nets.s_main, x_col, &z_main);
  int c = t.reshape(main_out, n, n);
  const int j_main = tape_mlp_jacobian(t, nets.s_main, z_main);
  int keep = -1, e1 = -1, j_bot = -1;
  if (mn.masked) {
    keep = t.constant(keep_right_mask(n, m));
    e1 = t.constant(embed_top(n, sub));
    const int xh = t.constant(Mat::col_vec(head(sample.x, sub)));
    int z_bot = -1;
    const int bot_out = tape_mlp_forward(t, nets.s_bot, xh, &z_bot);
    const int c_bot = t.reshape(bot_out, sub, sub);
    c = t.add(t.hadamard(c, keep), t.matmul(t.matmul(e1, c_bot), t.transpose_node(e1)));
    j_bot = tape_mlp_jacobian(t, nets.s_bot, z_bot);
  }
  const int w = t.add(t.matmul(t.transpose_node(c), c),
                      t.constant(mn.w_floor * Mat::identity(n)));

  std::vector<int> dw(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int dc = t.reshape(t.matmul(j_main, t.constant(unit_col(n, i))), n, n);
    if (mn.masked) {
      dc = t.hadamard(dc, keep);
      if (i < sub) {
        const int dcb = t.reshape(t.matmul(j_bot, t.constant(unit_col(sub, i))), sub, sub);
        dc = t.add(dc, t.matmul(t.matmul(e1, dcb), t.transpose_node(e1)));
      }
    }
    dw[static_cast<std::size_t>(i)] =
        t.add(t.matmul(t.transpose_node(dc), c), t.matmul(t.transpose_node(c), dc));
  }

  // Controller output and its state jacobian, one column per state axis.
  const int z_in = t.constant(Mat::col_vec(concat(sample.x, sample.xs)));
  const int xe_col = t.constant(Mat::col_vec(vec_sub(sample.x, sample.xs)));
  const int us_col = t.constant(Mat::col_vec(sample.us));
  const int sel = t.constant(first_arg_selector(n));
  int za = -1;
  const int a_out = tape_mlp_forward(t, nets.s_a, z_in, &za);
  int u = -1, gain = -1;
  std::vector<int> kcols(static_cast<std::size_t>(n));
  if (cn.arch == ControllerNet::Arch::kSimple) {
    const int k0 = t.reshape(a_out, m, n);
    u = t.add(t.matmul(k0, xe_col), us_col);
    const int ja = tape_mlp_jacobian(t, nets.s_a, za, sel);
    for (int col = 0; col < n; ++col) {
      const int ej = t.constant(unit_col(n, col));
      const int dj = t.reshape(t.matmul(ja, ej), m, n);
      kcols[static_cast<std::size_t>(col)] = t.add(t.matmul(dj, xe_col), t.matmul(k0, ej));
    }
    gain = t.concat_cols(kcols);
  } else {
    const int width = cn.bottleneck;
    const int w1 = t.reshape(a_out, width, n);
    int zb = -1;
    const int b_out = tape_mlp_forward(t, nets.s_b, z_in, &zb);
    const int w2 = t.reshape(b_out, m, width);
    const int z2 = t.matmul(w1, xe_col);
    const int h = t.tanh_node(z2);
    u = t.add(t.matmul(w2, h), us_col);
    const int dt = t.dtanh_node(z2);
    const int ja = tape_mlp_jacobian(t, nets.s_a, za, sel);
    const int jb = tape_mlp_jacobian(t, nets.s_b, zb, sel);
    for (int col = 0; col < n; ++col) {
      const int ej = t.constant(unit_col(n, col));
      const int d1 = t.reshape(t.matmul(ja, ej), width, n);
      const int d2 = t.reshape(t.matmul(jb, ej), m, width);
      const int inner = t.add(t.matmul(d1, xe_col), t.matmul(w1, ej));
      kcols[static_cast<std::size_t>(col)] =
          t.add(t.matmul(d2, h), t.matmul(w2, t.hadamard(dt, inner)));
    }
    gain = t.concat_cols(kcols);
  }

  // Closed-loop contraction matrix in dual form.
  const DynamicsEval ev = eval_dynamics(sys, sample.x, Vec(static_cast<std::size_t>(m), 0.0));
  const int b_c = t.constant(ev.b);
  int a_mat = t.constant(ev.dfdx);
  for (int j = 0; j < m; ++j) {
    const int uj = t.matmul(t.constant(unit_row(m, j)), u);
    a_mat = t.add(a_mat, t.scalar_mul(uj, t.constant(ev.dbdx[static_cast<std::size_t>(j)])));
  }
  const int xdot = t.add(t.constant(Mat::col_vec(ev.f)), t.matmul(b_c, u));
  int wdot = -1;
  for (int i = 0; i < n; ++i) {
    const int xi = t.matmul(t.constant(unit_row(n, i)), xdot);
    const int term = t.scalar_mul(xi, dw[static_cast<std::size_t>(i)]);
    wdot = (i == 0) ? term : t.add(wdot, term);
  }
  const int abk = t.add(a_mat, t.matmul(b_c, gain));
  const int p = t.matmul(abk, w);
  const int d = t.add(t.sub(t.add(p, t.transpose_node(p)), wdot), t.scale(2.0 * cfg.rate, w));
  const int contraction = t.hinge_quad(t.neg(d), &probes.dim_n, cfg.margin);

  int strong = -1, killing = -1;
  if (structured) {
    const Mat bp = annihilator(sys, sample.x);
    const int bp_t = t.constant(transpose(bp));
    const int bp_c = t.constant(bp);

    const int pf = t.matmul(t.constant(ev.dfdx), w);
    const int hatf = t.add(pf, t.transpose_node(pf));
    int dfw = -1;
    for (int i = 0; i < n; ++i) {
      const int term = t.scale(ev.f[static_cast<std::size_t>(i)], dw[static_cast<std::size_t>(i)]);
      dfw = (i == 0) ? term : t.add(dfw, term);
    }
    const int inner1 = t.add(t.sub(hatf, dfw), t.scale(2.0 * cfg.rate, w));
    const int c1 = t.matmul(t.matmul(bp_t, inner1), bp_c);
    strong = t.hinge_quad(t.neg(c1), &probes.dim_sub, cfg.margin);

    for (int j = 0; j < m; ++j) {
      int dbw = -1;
      for (int i = 0; i < n; ++i) {
        const int term = t.scale(ev.b(i, j), dw[static_cast<std::size_t>(i)]);
        dbw = (i == 0) ? term : t.add(dbw, term);
      }
      const int pj = t.matmul(t.constant(ev.dbdx[static_cast<std::size_t>(j)]), w);
      const int inner2 = t.sub(dbw, t.add(pj, t.transpose_node(pj)));
      const int c2 = t.matmul(t.matmul(bp_t, inner2), bp_c);
      const int fn = t.frob_norm(c2);
      killing = (j == 0) ? fn : t.add(killing, fn);
    }
  }

  const int cond_mat = t.sub(t.constant(mn.w_ceil * Mat::identity(n)), w);
  const int conditioning = t.hinge_quad(cond_mat, &probes.dim_n, cfg.margin);

  int total = t.scale(cfg.w_contraction, contraction);
  if (structured) {
    total = t.add(total, t.scale(cfg.w_strong, strong));
    total = t.add(total, t.scale(cfg.w_killing, killing));
  }
  total = t.add(total, t.scale(cfg.w_conditioning, conditioning));
  if (nodes != nullptr) *nodes = RiskNodes{contraction, strong, killing, conditioning};
  return total;
}

}  // namespace ccm
