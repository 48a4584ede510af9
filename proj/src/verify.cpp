#include "ccm/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ccm/errors.hpp"

namespace ccm {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ContractViolation(msg);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Covering radius estimate for `count` uniform draws: the radius of a grid
// with budget count / ln(count), since the largest empty ball among random
// points carries that log factor over a grid's. Used to inflate sampled
// sups; an estimate, which is why everything built on it stays tagged
// "sampled".
double sample_cover_radius(const Box& region, int count) {
  int d_eff = 0;
  for (int k = 0; k < region.dim(); ++k)
    if (region.hi[static_cast<std::size_t>(k)] > region.lo[static_cast<std::size_t>(k)]) ++d_eff;
  if (d_eff == 0) return 0.0;
  const double budget =
      count >= 3 ? static_cast<double>(count) / std::log(static_cast<double>(count)) : 1.0;
  const double side = std::max(1.0, std::floor(std::pow(budget, 1.0 / d_eff)));
  double acc = 0.0;
  for (int k = 0; k < region.dim(); ++k) {
    const double w = region.hi[static_cast<std::size_t>(k)] - region.lo[static_cast<std::size_t>(k)];
    if (w > 0.0) acc += (w / side) * (w / side);
  }
  return 0.5 * std::sqrt(acc);
}

Vec pack_point(const Vec& x, const Vec& xs, const Vec& us) {
  Vec z;
  z.reserve(x.size() + xs.size() + us.size());
  z.insert(z.end(), x.begin(), x.end());
  z.insert(z.end(), xs.begin(), xs.end());
  z.insert(z.end(), us.begin(), us.end());
  return z;
}

// Axes of the packed (x, x*, u*) point that actually vary over the region.
// Degenerate axes carry no distance between region points, so finite
// differences skip them.
std::vector<char> joint_active(const SystemModel& sys, const Box& err_box) {
  const int n = sys.n;
  const int m = sys.m;
  std::vector<char> act(static_cast<std::size_t>(2 * n + m), 0);
  for (int i = 0; i < n; ++i) {
    const bool sx = sys.state_box.hi[static_cast<std::size_t>(i)] >
                    sys.state_box.lo[static_cast<std::size_t>(i)];
    const bool se =
        err_box.hi[static_cast<std::size_t>(i)] > err_box.lo[static_cast<std::size_t>(i)];
    act[static_cast<std::size_t>(i)] = static_cast<char>(sx || se);
    act[static_cast<std::size_t>(n + i)] = static_cast<char>(sx);
  }
  for (int j = 0; j < m; ++j)
    act[static_cast<std::size_t>(2 * n + j)] =
        static_cast<char>(sys.control_box.hi[static_cast<std::size_t>(j)] >
                          sys.control_box.lo[static_cast<std::size_t>(j)]);
  return act;
}

// sqrt(sum_i ||dF/dz_i||_2^2) by central differences over the active axes;
// Cauchy-Schwarz makes this a bound on the derivative in any unit direction.
double fd_stack_norm(const std::function<Mat(const Vec&)>& f, const Vec& z,
                     const std::vector<char>& active) {
  double acc = 0.0;
  Vec zp = z;
  Vec zm = z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!active[i]) continue;
    const double h = 1e-5 * (1.0 + std::abs(z[i]));
    zp[i] = z[i] + h;
    zm[i] = z[i] - h;
    const double s = spectral_norm((1.0 / (2.0 * h)) * (f(zp) - f(zm)));
    acc += s * s;
    zp[i] = z[i];
    zm[i] = z[i];
  }
  return std::sqrt(acc);
}

struct JointSample {
  Vec x, xs, us;
};

JointSample draw_joint(const SystemModel& sys, const Box& err_box, Rng& rng) {
  JointSample s;
  s.xs = sample_box(sys.state_box, rng);
  const Vec e = sample_box(err_box, rng);
  s.x = vec_add(s.xs, e);
  s.us = sample_box(sys.control_box, rng);
  return s;
}

}  // namespace

const char* bound_source_name(BoundSource s) {
  switch (s) {
    case BoundSource::kAnalytic: return "analytic";
    case BoundSource::kSpectralBound: return "spectral-bound";
    case BoundSource::kSampled: return "sampled";
  }
  throw ContractViolation("bound_source_name: unknown source");
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kCertified: return "certified";
    case Verdict::kRefuted: return "refuted";
    case Verdict::kInconclusive: return "inconclusive";
  }
  throw ContractViolation("verdict_name: unknown verdict");
}

double composite_lipschitz(const LipschitzBreakdown& b, double rate) {
  const double vals[] = {b.l_mdot.value, b.l_m.value, b.l_a.value, b.l_b.value, b.l_k.value,
                         b.s_m.value,    b.s_a.value, b.s_b.value, b.s_k.value};
  for (const double v : vals)
    require(v >= 0.0, "composite_lipschitz: breakdown entries must be nonnegative");
  require(rate >= 0.0, "composite_lipschitz: rate must be nonnegative");
  return b.l_mdot.value +
         2.0 * (b.s_m.value * b.l_a.value + b.s_a.value * b.l_m.value +
                b.s_m.value * b.s_b.value * b.l_k.value +
                b.s_b.value * b.s_k.value * b.l_m.value +
                b.s_m.value * b.s_k.value * b.l_b.value + rate * b.l_m.value);
}

double network_lipschitz(const Mlp2& net) {
  return spectral_norm(net.w2) * spectral_norm(net.w1);
}

SampledBound sampled_bounds(const std::function<double(const Vec&)>& g, const Box& region,
                            int count, std::uint64_t seed, double inflation) {
  require(count >= 1, "sampled_bounds: count must be positive");
  require(inflation >= 0.0, "sampled_bounds: inflation must be nonnegative");
  require(region.dim() >= 1, "sampled_bounds: empty region");
  Rng rng(seed);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const double v = g(sample_box(region, rng));
    if (!std::isfinite(v))
      throw NumericDomain("sampled_bounds: evaluator returned a non-finite value");
    best = std::max(best, v);
  }
  SampledBound out;
  out.max_sample = best;
  out.cover_radius = sample_cover_radius(region, count);
  out.bound = best + inflation * out.cover_radius;
  return out;
}

ControllerConstants controller_constants_simple(const ControllerNet& cn, const Box& err_box) {
  if (cn.arch != ControllerNet::Arch::kSimple)
    throw UnsupportedOperation(
        "controller_constants_simple: the bottleneck architecture has no closed-form feedback "
        "constants; retrain with the simple architecture for deterministic verification");
  const int n = cn.n;
  const int m = cn.m;
  require(err_box.dim() == n, "controller_constants_simple: error box dimension mismatch");
  const Mlp2& net = cn.net_a;
  const int hidden = net.hidden_dim;

  const double nw1 = spectral_norm(net.w1);
  const double nw2 = spectral_norm(net.w2);

  ControllerConstants out;
  out.l_gain = nw2 * nw1;
  // Hidden activations live in [-1, 1], so the gain norm is bounded without
  // sampling.
  out.s_gain = nw2 * std::sqrt(static_cast<double>(hidden)) + frobenius_norm(net.b2);

  Mat a11(hidden, n);
  for (int r = 0; r < hidden; ++r)
    for (int c = 0; c < n; ++c) a11(r, c) = net.w1(r, c);
  const double na11 = spectral_norm(a11);

  // K = k + sum_i (x - x*)^i dk_i/dx over columns k_i of the gain. Each
  // column is a two-layer network sharing the hidden layer, so its slopes
  // factor through the second-layer rows that produce it.
  double s_sum = 0.0;
  double l_sum = 0.0;
  double c_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Mat a2i(m, hidden);
    for (int r = 0; r < m; ++r)
      for (int h = 0; h < hidden; ++h) a2i(r, h) = net.w2(r * n + i, h);
    const double na2i = spectral_norm(a2i);
    const double sup_e = std::max(std::abs(err_box.lo[static_cast<std::size_t>(i)]),
                                  std::abs(err_box.hi[static_cast<std::size_t>(i)]));
    const double l_col = na2i * na11;
    const double l_dcol = na2i * na11 * nw1 * kDTanhLipschitz;
    s_sum += sup_e * l_col;
    l_sum += sup_e * l_dcol;
    c_sum += l_col;
  }
  out.s_k = out.s_gain + s_sum;
  out.l_k = out.l_gain + l_sum + std::sqrt(2.0) * c_sum;
  return out;
}

MetricConstants metric_constants(const MetricNet& mn, const Box& state_box, int count,
                                 std::uint64_t seed) {
  require(state_box.dim() == mn.n, "metric_constants: state box dimension mismatch");
  require(count >= 1, "metric_constants: count must be positive");

  MetricConstants out;
  out.l_c = network_lipschitz(mn.c_main);
  // Masked factors assemble two networks into disjoint blocks, so their
  // squared Lipschitz constants add.
  if (mn.masked) out.l_c = std::hypot(out.l_c, network_lipschitz(mn.c_bot));

  const SampledBound sc = sampled_bounds(
      [&](const Vec& x) { return spectral_norm(metric_factor(mn, x)); }, state_box, count, seed,
      out.l_c);
  out.s_c = sc.bound;
  out.l_w = 2.0 * out.s_c * out.l_c;
  out.l_m = out.l_w / (mn.w_floor * mn.w_floor);
  out.s_m = 1.0 / mn.w_floor;
  out.m_hi = 1.0 / mn.w_floor;

  const SampledBound sw = sampled_bounds(
      [&](const Vec& x) { return sym_eig_max(dual_metric(mn, x)); }, state_box, count,
      seed ^ 0x6d6c6fu, out.l_w);
  out.m_lo = 1.0 / sw.bound;
  return out;
}

SystemConstants system_constants(const SystemModel& sys, const ControllerNet& cn,
                                 const Box& err_box, int count, std::uint64_t seed) {
  require(err_box.dim() == sys.n, "system_constants: error box dimension mismatch");
  require(count >= 1, "system_constants: count must be positive");

  SystemConstants out;
  if (sys.name == "dubins") {
    // The input matrix is constant with orthonormal columns, and the only
    // state dependence of the Jacobian is through (heading, speed), whose
    // slope norms peak at the speed cap.
    const double vh = sys.state_box.hi[3];
    out.l_a = {std::sqrt(2.0 + vh * vh), BoundSource::kAnalytic};
    out.s_a = {std::sqrt(1.0 + vh * vh), BoundSource::kAnalytic};
    out.l_b = {0.0, BoundSource::kAnalytic};
    out.s_b = {spectral_norm(sys.b(sys.state_box.center())), BoundSource::kAnalytic};
    return out;
  }

  const int n = sys.n;
  const auto act = joint_active(sys, err_box);
  const auto a_of = [&](const Vec& z) {
    const Vec x(z.begin(), z.begin() + n);
    const Vec xs(z.begin() + n, z.begin() + 2 * n);
    const Vec us(z.begin() + 2 * n, z.end());
    const ControlEval ctrl = eval_controller(cn, x, xs, us);
    return generalized_jacobian(sys, x, ctrl.u);
  };
  std::vector<char> act_x(act.size(), 0);
  for (int i = 0; i < n; ++i) act_x[static_cast<std::size_t>(i)] = act[static_cast<std::size_t>(i)];
  const auto b_of = [&](const Vec& z) { return sys.b(Vec(z.begin(), z.begin() + n)); };

  Rng rng(seed);
  double sa = 0.0, la = 0.0, sb = 0.0, lb = 0.0;
  for (int i = 0; i < count; ++i) {
    const JointSample s = draw_joint(sys, err_box, rng);
    const Vec z = pack_point(s.x, s.xs, s.us);
    sa = std::max(sa, spectral_norm(a_of(z)));
    sb = std::max(sb, spectral_norm(b_of(z)));
    la = std::max(la, fd_stack_norm(a_of, z, act));
    lb = std::max(lb, fd_stack_norm(b_of, z, act_x));
  }
  out.l_a = {la, BoundSource::kSampled};
  out.s_a = {sa, BoundSource::kSampled};
  out.l_b = {lb, BoundSource::kSampled};
  out.s_b = {sb, BoundSource::kSampled};
  return out;
}

Mat closed_loop_mdot(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                     const Vec& x, const Vec& xs, const Vec& us) {
  const ControlEval ctrl = eval_controller(cn, x, xs, us);
  const DynamicsEval ev = eval_dynamics(sys, x, ctrl.u);
  const Mat w = dual_metric(mn, x);
  Mat metric;
  try {
    metric = inverse(w);
  } catch (const SingularMatrix&) {
    throw SingularMatrix("closed_loop_mdot: dual metric not invertible");
  }
  metric = 0.5 * (metric + transpose(metric));

  const std::vector<Mat> dw = dual_metric_grad(mn, x);
  Mat wdot = ev.xdot[0] * dw[0];
  for (int i = 1; i < sys.n; ++i) wdot = wdot + ev.xdot[static_cast<std::size_t>(i)] * dw[i];
  Mat mdot = -1.0 * (metric * wdot * metric);
  return 0.5 * (mdot + transpose(mdot));
}

double mdot_lipschitz(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                      const Box& err_box, int count, std::uint64_t seed, double headroom) {
  require(err_box.dim() == sys.n, "mdot_lipschitz: error box dimension mismatch");
  require(count >= 1, "mdot_lipschitz: count must be positive");
  require(headroom >= 1.0, "mdot_lipschitz: headroom must be at least 1");

  const int n = sys.n;
  const auto f = [&](const Vec& z) {
    const Vec x(z.begin(), z.begin() + n);
    const Vec xs(z.begin() + n, z.begin() + 2 * n);
    const Vec us(z.begin() + 2 * n, z.end());
    return closed_loop_mdot(sys, mn, cn, x, xs, us);
  };
  const auto act = joint_active(sys, err_box);

  Rng rng(seed);
  double best = 0.0;
  for (int i = 0; i < count; ++i) {
    const JointSample s = draw_joint(sys, err_box, rng);
    best = std::max(best, fd_stack_norm(f, pack_point(s.x, s.xs, s.us), act));
  }
  return headroom * best;
}

CertificateReport grid_verify(const std::function<double(const Vec&)>& g,
                              const std::vector<Box>& region, double tau, double lipschitz,
                              int workers, long grid_cap) {
  require(!region.empty(), "grid_verify: empty region");
  require(tau > 0.0, "grid_verify: tau must be positive");
  require(lipschitz >= 0.0, "grid_verify: lipschitz must be nonnegative");
  require(workers >= 1, "grid_verify: workers must be positive");
  require(grid_cap >= 1, "grid_verify: grid cap must be positive");

  struct Axis {
    double lo = 0.0, width = 0.0;
    long count = 1;
  };
  std::vector<Axis> axes;
  int d_eff = 0;
  for (const Box& box : region) {
    require(box.lo.size() == box.hi.size(), "grid_verify: malformed box");
    for (int k = 0; k < box.dim(); ++k) {
      Axis ax;
      ax.lo = box.lo[static_cast<std::size_t>(k)];
      ax.width = box.hi[static_cast<std::size_t>(k)] - ax.lo;
      require(ax.width >= 0.0, "grid_verify: box with hi < lo");
      if (ax.width > 0.0) ++d_eff;
      axes.push_back(ax);
    }
  }
  require(!axes.empty(), "grid_verify: region has no axes");

  // Per-axis spacing h keeps every region point within tau of a grid point:
  // the worst cell-center distance is sqrt(d_eff) h / 2.
  const double h = d_eff > 0 ? 2.0 * tau / std::sqrt(static_cast<double>(d_eff)) : 1.0;
  double total_d = 1.0;
  for (Axis& ax : axes) {
    if (ax.width > 0.0) ax.count = static_cast<long>(std::ceil(ax.width / h)) + 1;
    total_d *= static_cast<double>(ax.count);
  }
  if (total_d > static_cast<double>(grid_cap)) {
    const double tau_req = tau * std::pow(total_d / static_cast<double>(grid_cap),
                                          1.0 / std::max(1, d_eff));
    throw UnsupportedOperation("grid_verify: " + fmt_g(total_d) + " grid points at tau=" +
                               fmt_g(tau) + " exceed the cap of " + std::to_string(grid_cap) +
                               "; tau >= " + fmt_g(tau_req) + " fits");
  }
  long total = 1;
  for (const Axis& ax : axes) total *= ax.count;

  const int dim = static_cast<int>(axes.size());
  const auto point_at = [&axes, dim](long idx, Vec& z) {
    for (int a = 0; a < dim; ++a) {
      const Axis& ax = axes[static_cast<std::size_t>(a)];
      const long i = idx % ax.count;
      idx /= ax.count;
      // lo + width * (i / (count-1)) lands on both endpoints exactly.
      z[static_cast<std::size_t>(a)] =
          ax.count == 1 ? ax.lo
                        : ax.lo + ax.width * (static_cast<double>(i) /
                                              static_cast<double>(ax.count - 1));
    }
  };

  // Chunked parallel reduction. Max and min-index merges are order
  // independent, so the verdict cannot depend on the worker count.
  constexpr long kChunk = 4096;
  std::atomic<long> cursor{0};
  std::mutex merge_mu;
  double worst = -std::numeric_limits<double>::infinity();
  long first_bad = total;
  long first_fail = total;
  std::string fail_what;

  const auto work = [&]() {
    double lmax = -std::numeric_limits<double>::infinity();
    long lbad = total;
    long lfail = total;
    std::string lwhat;
    Vec z(static_cast<std::size_t>(dim));
    for (;;) {
      const long c = cursor.fetch_add(1);
      const long start = c * kChunk;
      if (start >= total) break;
      const long end = std::min(total, start + kChunk);
      for (long idx = start; idx < end; ++idx) {
        point_at(idx, z);
        double v;
        try {
          v = g(z);
        } catch (const std::exception& e) {
          if (idx < lfail) {
            lfail = idx;
            lwhat = e.what();
          }
          continue;
        }
        if (!std::isfinite(v)) {
          if (idx < lfail) {
            lfail = idx;
            lwhat = "non-finite value";
          }
          continue;
        }
        lmax = std::max(lmax, v);
        if (v >= 0.0 && idx < lbad) lbad = idx;
      }
    }
    std::lock_guard<std::mutex> lk(merge_mu);
    worst = std::max(worst, lmax);
    first_bad = std::min(first_bad, lbad);
    if (lfail < first_fail) {
      first_fail = lfail;
      fail_what = lwhat;
    }
  };

  const long chunks = (total + kChunk - 1) / kChunk;
  const int nthreads = static_cast<int>(std::min<long>(workers, chunks));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  if (first_fail < total)
    throw NumericDomain("grid_verify: evaluation failed at grid point " +
                        std::to_string(first_fail) + ": " + fail_what);

  CertificateReport rep;
  rep.region = region;
  rep.tau = tau;
  rep.lipschitz = lipschitz;
  rep.grid_points = total;
  rep.worst_value = worst;
  rep.margin = -(lipschitz * tau);
  if (first_bad < total) {
    Vec cx(static_cast<std::size_t>(dim));
    point_at(first_bad, cx);
    rep.verdict = Verdict::kRefuted;
    rep.counterexample = cx;
    rep.note = "refuted: grid point with value " + fmt_g(g(cx));
  } else if (worst < rep.margin) {
    rep.verdict = Verdict::kCertified;
    rep.note = "certified";
  } else {
    rep.verdict = Verdict::kInconclusive;
    rep.note = "inconclusive: worst grid value " + fmt_g(worst) +
               " does not clear the margin " + fmt_g(rep.margin);
  }
  return rep;
}

CertificateReport certify(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                          const CertifyConfig& cfg) {
  require(mn.n == sys.n && cn.n == sys.n && cn.m == sys.m,
          "certify: model dimensions do not match the system");
  if (cn.arch != ControllerNet::Arch::kSimple)
    throw UnsupportedOperation(
        "certify: deterministic verification supports the simple controller architecture only; "
        "bottleneck models get statistical evaluation instead");
  require(cfg.tau > 0.0, "certify: tau must be positive");
  require(cfg.err_halfwidth > 0.0, "certify: error halfwidth must be positive");
  require(cfg.sample_count >= 1, "certify: sample count must be positive");
  const double rate = cfg.rate > 0.0 ? cfg.rate : sys.default_rate;

  Box err;
  err.lo.assign(static_cast<std::size_t>(sys.n), -cfg.err_halfwidth);
  err.hi.assign(static_cast<std::size_t>(sys.n), cfg.err_halfwidth);

  const Rng base(cfg.seed);
  const MetricConstants mc =
      metric_constants(mn, sys.state_box, cfg.sample_count, base.fork(0x6d636f6eull).seed());
  const ControllerConstants cc = controller_constants_simple(cn, err);
  const SystemConstants sc =
      system_constants(sys, cn, err, cfg.sample_count, base.fork(0x73636f6eull).seed());
  const double lmdot = mdot_lipschitz(sys, mn, cn, err, cfg.sample_count,
                                      base.fork(0x6d646f74ull).seed(), cfg.mdot_headroom);

  LipschitzBreakdown b;
  b.l_mdot = {lmdot, BoundSource::kSampled};
  b.l_m = {mc.l_m, BoundSource::kSampled};  // inherits the sampled factor sup
  b.l_a = sc.l_a;
  b.s_a = sc.s_a;
  b.l_b = sc.l_b;
  b.s_b = sc.s_b;
  b.l_k = {cc.l_k, BoundSource::kSpectralBound};
  b.s_k = {cc.s_k, BoundSource::kSpectralBound};
  b.s_m = {mc.s_m, BoundSource::kAnalytic};
  const double composite = composite_lipschitz(b, rate);

  const int n = sys.n;
  const auto g = [&](const Vec& z) {
    const Vec xs(z.begin(), z.begin() + n);
    Vec x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      x[static_cast<std::size_t>(i)] =
          z[static_cast<std::size_t>(i)] + z[static_cast<std::size_t>(n + i)];
    const Vec us(z.begin() + 2 * n, z.end());
    return sym_eig_max(contraction_matrix_primal(sys, mn, cn, rate, x, xs, us));
  };

  // The grid lives in (x*, offset, u*) coordinates while the constants are
  // for (x, x*, u*); the largest singular value of the change of variables
  // (the golden ratio) converts radius and slope so that the margin is still
  // -composite * tau.
  const double stretch = 0.5 * (1.0 + std::sqrt(5.0));
  CertificateReport rep = grid_verify(g, {sys.state_box, err, sys.control_box},
                                      cfg.tau / stretch, stretch * composite, cfg.workers,
                                      cfg.grid_cap);
  rep.rate = rate;
  rep.tau = cfg.tau;
  rep.lipschitz = composite;
  rep.breakdown = b;
  rep.m_lo = mc.m_lo;
  rep.m_hi = mc.m_hi;
  rep.bound_method = "spectral-product";
  if (rep.verdict == Verdict::kCertified)
    rep.note = "certified modulo the sampled entries of the Lipschitz breakdown";
  return rep;
}

double TubeBound::at(double t) const {
  if (!(t >= 0.0)) throw ContractViolation("TubeBound: time must be nonnegative");
  const double decay = std::exp(-rate * t);
  return (r0 / std::sqrt(m_lo)) * decay + std::sqrt(m_hi / m_lo) * (eps / rate) * (1.0 - decay);
}

TubeBound tube_bound(double m_lo, double m_hi, double rate, double eps, const Vec& x1_0,
                     const Vec& x2_0) {
  require(m_lo > 0.0 && m_hi >= m_lo, "tube_bound: need m_hi >= m_lo > 0");
  require(rate > 0.0, "tube_bound: rate must be positive");
  require(eps >= 0.0, "tube_bound: disturbance bound must be nonnegative");
  require(x1_0.size() == x2_0.size() && !x1_0.empty(),
          "tube_bound: initial states must share a dimension");
  TubeBound tb;
  tb.r0 = std::sqrt(m_hi) * norm2(vec_sub(x1_0, x2_0));
  tb.eps = eps;
  tb.rate = rate;
  tb.m_lo = m_lo;
  tb.m_hi = m_hi;
  return tb;
}

}  // namespace ccm
