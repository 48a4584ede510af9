#include "ccm/simeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "ccm/errors.hpp"
#include "ccm/rng.hpp"

namespace ccm {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

Vec closed_loop_rate(const SystemModel& sys, const Vec& x, const Vec& u, const Vec& d) {
  Vec xdot = eval_dynamics(sys, x, u).xdot;
  for (std::size_t i = 0; i < xdot.size(); ++i) xdot[i] += d[i];
  return xdot;
}

// One zero-order-hold step: u and d frozen across the stage evaluations.
Vec step_once(const SystemModel& sys, const Vec& x, const Vec& u, const Vec& d, double dt,
              Stepper stepper) {
  if (stepper == Stepper::kEuler) {
    const Vec k1 = closed_loop_rate(sys, x, u, d);
    Vec out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += dt * k1[i];
    return out;
  }
  const Vec k1 = closed_loop_rate(sys, x, u, d);
  Vec mid = x;
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = x[i] + 0.5 * dt * k1[i];
  const Vec k2 = closed_loop_rate(sys, mid, u, d);
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = x[i] + 0.5 * dt * k2[i];
  const Vec k3 = closed_loop_rate(sys, mid, u, d);
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = x[i] + dt * k3[i];
  const Vec k4 = closed_loop_rate(sys, mid, u, d);
  Vec out = x;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

bool finite_vec(const Vec& v) {
  for (double e : v)
    if (!std::isfinite(e)) return false;
  return true;
}

struct SinusoidMix {
  Vec center;
  Vec lo, hi;
  std::vector<Vec> weights;  // per control axis, one weight per frequency
  const std::vector<double>* freqs;

  Vec at(double time) const {
    Vec u = center;
    for (std::size_t k = 0; k < u.size(); ++k) {
      for (std::size_t f = 0; f < freqs->size(); ++f)
        u[k] += weights[k][f] * std::sin(kTwoPi * (*freqs)[f] * time);
      u[k] = std::clamp(u[k], lo[k], hi[k]);
    }
    return u;
  }
};

// Input the sinusoids ride on: the least-squares trim at the init-box
// center, clipped into the control box. Keeps drift-dominated systems
// (gravity, net thrust) from running away before the weights even act.
Vec reference_base(const SystemModel& sys) {
  const Vec c = sys.init_box.center();
  const Vec f = sys.f(c);
  const Mat b = sys.b(c);
  Mat g = transpose(b) * b;
  double scale = 0.0;
  for (int i = 0; i < g.rows; ++i) scale = std::max(scale, g(i, i));
  const double ridge = 1e-10 * (1.0 + scale);
  for (int i = 0; i < g.rows; ++i) g(i, i) += ridge;
  const Vec rhs = vec_scale(-1.0, mat_vec(transpose(b), f));
  Vec u = mat_vec(inverse(g), rhs);
  for (std::size_t k = 0; k < u.size(); ++k)
    u[k] = std::clamp(u[k], sys.control_box.lo[k], sys.control_box.hi[k]);
  return u;
}

}  // namespace

ReferenceSpec default_reference_spec(const SystemModel& sys) {
  ReferenceSpec spec;
  const std::string& n = sys.name;
  spec.horizon = (n == "dubins" || n == "pendulum" || n == "cartpole") ? 10.0 : 6.0;
  // Open-loop richness each plant tolerates before leaving 1.5x the state
  // box: the pvtol roll and both quadrotors take only mild excitation, and
  // the inverted pendulum none at all (X0 pins the upright equilibrium).
  if (n == "pvtol") spec.weight_scale = 0.01;
  if (n == "quadrotor") spec.weight_scale = 0.5;
  if (n == "quadrotor2") spec.weight_scale = 0.05;
  if (n == "neural_lander") spec.weight_scale = 0.3;
  if (n == "pendulum") spec.weight_scale = 0.0;
  if (n == "dubins") {
    // Zero-mean steering at the stock frequencies cannot bend the constant
    // speed path enough to stay in the box; a ten-times-slower grid acts as
    // near-constant curvature over the horizon and the car loops instead.
    for (auto& f : spec.frequencies) f *= 0.1;
    spec.weight_scale = 3.0;
  }
  return spec;
}

Vec Disturbance::at(double time) const {
  if (start.empty()) return Vec(static_cast<std::size_t>(dim), 0.0);
  auto it = std::upper_bound(start.begin(), start.end(), time);
  const std::size_t idx = static_cast<std::size_t>(it - start.begin());
  if (idx == 0) return Vec(static_cast<std::size_t>(dim), 0.0);
  return value[idx - 1];
}

Disturbance gen_disturbance(const DisturbanceSpec& spec, int dim, double t_end,
                            unsigned long long seed) {
  if (spec.sigma < 0.0) throw ContractViolation("gen_disturbance: sigma must be nonnegative");
  if (dim < 1 || t_end <= 0.0) throw ContractViolation("gen_disturbance: bad dimensions");
  Disturbance d;
  d.sigma = spec.sigma;
  d.dim = dim;
  Rng rng(seed);
  double t = 0.0;
  while (t < t_end) {
    double len = rng.uniform(0.0, 1.0);
    if (len < 1e-12) len = 1e-12;
    const double mag = rng.uniform(0.0, spec.sigma);
    Vec dir = rng.unit_vector(dim);
    for (auto& e : dir) e *= mag;
    d.start.push_back(t);
    d.value.push_back(std::move(dir));
    t += len;
  }
  return d;
}

Reference gen_reference(const SystemModel& sys, const ReferenceSpec& spec,
                        unsigned long long seed) {
  if (spec.horizon <= 0.0 || spec.dt <= 0.0)
    throw ContractViolation("gen_reference: horizon and dt must be positive");
  if (spec.frequencies.empty()) throw ContractViolation("gen_reference: no frequencies");

  const long steps = static_cast<long>(std::llround(spec.horizon / spec.dt));
  const std::size_t f_count = spec.frequencies.size();
  Rng base(seed);

  const Vec trim = reference_base(sys);
  for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
    Rng rng = base.fork(static_cast<unsigned long long>(attempt));
    SinusoidMix mix;
    mix.center = trim;
    mix.lo = sys.control_box.lo;
    mix.hi = sys.control_box.hi;
    mix.freqs = &spec.frequencies;
    const Vec half = sys.control_box.halfwidth();
    mix.weights.resize(static_cast<std::size_t>(sys.m));
    for (int k = 0; k < sys.m; ++k) {
      const double range = spec.weight_scale * half[static_cast<std::size_t>(k)] /
                           static_cast<double>(f_count);
      Vec& w = mix.weights[static_cast<std::size_t>(k)];
      w.resize(f_count);
      for (auto& e : w) e = rng.uniform(-range, range);
    }

    Reference ref;
    ref.t.reserve(static_cast<std::size_t>(steps) + 1);
    ref.x.reserve(static_cast<std::size_t>(steps) + 1);
    ref.u.reserve(static_cast<std::size_t>(steps) + 1);
    Vec x = sample_box(sys.init_box, rng);
    const Vec zero_d(static_cast<std::size_t>(sys.n), 0.0);
    bool ok = true;
    for (long k = 0; k <= steps; ++k) {
      const double time = static_cast<double>(k) * spec.dt;
      if (!finite_vec(x) || !sys.state_box.contains(x, 1.5)) {
        ok = false;
        break;
      }
      const Vec u = mix.at(time);
      ref.t.push_back(time);
      ref.x.push_back(x);
      ref.u.push_back(u);
      if (k < steps) {
        try {
          x = step_once(sys, x, u, zero_d, spec.dt, Stepper::kRk4);
        } catch (const NumericDomain&) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return ref;
  }
  throw NumericDomain("gen_reference: no in-region reference for " + sys.name + " within " +
                      std::to_string(spec.max_retries) + " retries at horizon " +
                      std::to_string(spec.horizon) + ", try a shorter horizon");
}

Trajectory simulate(const SystemModel& sys, const ControllerNet& cn, const Reference& ref,
                    const Disturbance& dist, const Vec& x0, Stepper stepper) {
  if (ref.t.empty() || ref.t.size() != ref.x.size() || ref.t.size() != ref.u.size())
    throw ContractViolation("simulate: malformed reference");
  if (static_cast<int>(x0.size()) != sys.n) throw ContractViolation("simulate: x0 dimension");
  if (dist.dim != 0 && dist.dim != sys.n)
    throw ContractViolation("simulate: disturbance dimension");

  Trajectory tr;
  const std::size_t len = ref.t.size();
  tr.t.reserve(len);
  Vec x = x0;
  if (!finite_vec(x0)) throw ContractViolation("simulate: x0 must be finite");
  const Vec no_d(static_cast<std::size_t>(sys.n), 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    if (!finite_vec(x)) {  // numeric blowup, drop the unusable point
      tr.diverged = true;
      break;
    }
    const Vec d = dist.dim == sys.n ? dist.at(ref.t[k]) : no_d;
    const ControlEval ce = eval_controller(cn, x, ref.x[k], ref.u[k]);
    tr.t.push_back(ref.t[k]);
    tr.x.push_back(x);
    tr.xstar.push_back(ref.x[k]);
    tr.u.push_back(ce.u);
    tr.ustar.push_back(ref.u[k]);
    tr.d.push_back(d);
    if (!sys.state_box.contains(x, 3.0)) {
      tr.diverged = true;
      break;
    }
    if (k + 1 < len) {
      const double dt = ref.t[k + 1] - ref.t[k];
      try {
        x = step_once(sys, x, ce.u, d, dt, stepper);
      } catch (const NumericDomain&) {
        tr.diverged = true;
        break;
      }
    }
  }
  return tr;
}

Vec error_curve(const Trajectory& traj) {
  Vec out(traj.t.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = norm2(vec_sub(traj.x[k], traj.xstar[k]));
  return out;
}

Vec normalized_error_curve(const Trajectory& traj) {
  Vec out = error_curve(traj);
  if (out.empty() || out[0] <= 0.0)
    throw NumericDomain("normalized_error_curve: zero initial error, use the unnormalized curve");
  const double inv = 1.0 / out[0];
  for (auto& e : out) e *= inv;
  return out;
}

double auc(const Vec& curve, double dt) {
  if (curve.empty()) throw ContractViolation("auc: empty curve");
  if (dt <= 0.0) throw ContractViolation("auc: dt must be positive");
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) area += 0.5 * dt * (curve[k] + curve[k + 1]);
  return area;
}

double auc_time_avg(const Vec& curve, double dt) {
  if (curve.size() < 2) throw ContractViolation("auc_time_avg: need at least two points");
  return auc(curve, dt) / (static_cast<double>(curve.size() - 1) * dt);
}

ConvergenceFit fit_convergence(const std::vector<Vec>& curves, double dt) {
  if (curves.empty()) throw ContractViolation("fit_convergence: no curves");
  if (dt <= 0.0) throw ContractViolation("fit_convergence: dt must be positive");

  std::size_t max_len = 0;
  std::vector<Vec> logs(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (curves[i].empty()) throw ContractViolation("fit_convergence: empty curve");
    logs[i].resize(curves[i].size());
    for (std::size_t k = 0; k < curves[i].size(); ++k)
      logs[i][k] = std::log(std::max(curves[i][k], 1e-9));
    max_len = std::max(max_len, curves[i].size());
  }
  const double horizon = static_cast<double>(max_len - 1) * dt;

  // log C(lambda): smallest feasible overshoot, never below 1.
  auto log_overshoot = [&](double lambda) {
    double best = 0.0;
    for (const Vec& lg : logs)
      for (std::size_t k = 0; k < lg.size(); ++k)
        best = std::max(best, lg[k] + lambda * static_cast<double>(k) * dt);
    return best;
  };

  if (max_len == 1) {
    // Only t=0 samples: any rate is vacuous, report the overshoot alone.
    ConvergenceFit fit;
    fit.overshoot = std::exp(log_overshoot(0.0));
    fit.rates.assign(curves.size(), 0.0);
    return fit;
  }

  // log of the envelope area C (1 - exp(-lambda T)) / lambda.
  auto log_area = [&](double lambda) {
    return log_overshoot(lambda) + std::log1p(-std::exp(-lambda * horizon)) - std::log(lambda);
  };

  double lo = 1e-3, hi = 50.0;
  double best_lambda = lo;
  double best_val = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 5; ++round) {
    const int points = round == 0 ? 400 : 100;
    const double step = (hi - lo) / points;
    for (int p = 0; p <= points; ++p) {
      const double lambda = lo + step * p;
      if (lambda <= 0.0) continue;
      const double val = log_area(lambda);
      if (val < best_val) {
        best_val = val;
        best_lambda = lambda;
      }
    }
    lo = std::max(1e-9, best_lambda - step);
    hi = best_lambda + step;
  }

  ConvergenceFit fit;
  fit.lambda = best_lambda;
  const double log_c = log_overshoot(best_lambda);
  fit.overshoot = std::exp(log_c);
  fit.rates.resize(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    double rate = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < logs[i].size(); ++k)
      rate = std::min(rate, (log_c - logs[i][k]) / (static_cast<double>(k) * dt));
    if (!std::isfinite(rate)) rate = 0.0;  // single-point curve carries no decay evidence
    fit.rates[i] = std::max(0.0, rate);
  }
  return fit;
}

ConformalQuantile conformal_quantile(Vec scores, double alpha) {
  const long n = static_cast<long>(scores.size());
  if (n < 1) throw ContractViolation("conformal_quantile: need at least one score");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("conformal_quantile: alpha in (0,1)");
  for (double s : scores)
    if (!std::isfinite(s)) throw ContractViolation("conformal_quantile: non-finite score");

  const double rank = (1.0 - alpha) * static_cast<double>(n + 1);
  // Snap ranks that are integers up to round-off before taking the ceiling.
  const double rounded = std::round(rank);
  long index;
  if (std::fabs(rank - rounded) < 1e-9)
    index = static_cast<long>(rounded);
  else
    index = static_cast<long>(std::ceil(rank));

  ConformalQuantile out;
  out.index = index;
  if (index > n) {
    out.q = std::numeric_limits<double>::infinity();
    return out;
  }
  std::sort(scores.begin(), scores.end());
  out.q = scores[static_cast<std::size_t>(index - 1)];
  return out;
}

std::vector<Trajectory> run_rollouts(const SystemModel& sys, const ControllerNet& cn,
                                     const RolloutConfig& cfg) {
  if (cfg.count < 1 || cfg.workers < 1)
    throw ContractViolation("run_rollouts: count and workers must be positive");
  std::vector<Trajectory> out(static_cast<std::size_t>(cfg.count));
  Rng base(cfg.seed);

  auto run_one = [&](int i) {
    Rng rng = base.fork(static_cast<unsigned long long>(i) + 1);
    const unsigned long long ref_seed = rng.next_u64();
    const unsigned long long dist_seed = rng.next_u64();
    const Vec e0 = sample_box(sys.err_box, rng);
    const Reference ref = gen_reference(sys, cfg.ref, ref_seed);
    const Disturbance dist = gen_disturbance(DisturbanceSpec{cfg.sigma}, sys.n,
                                             cfg.ref.horizon + cfg.ref.dt, dist_seed);
    const Vec x0 = vec_add(ref.x[0], e0);
    out[static_cast<std::size_t>(i)] = simulate(sys, cn, ref, dist, x0, cfg.stepper);
  };

  if (cfg.workers == 1) {
    for (int i = 0; i < cfg.count; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.count + cfg.workers - 1) / cfg.workers;
    for (int w = 0; w < cfg.workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(lo + chunk, cfg.count);
      if (lo >= hi) continue;
      pool.emplace_back([&, lo, hi] {
        for (int i = lo; i < hi; ++i) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

Vec auc_scores(const std::vector<Trajectory>& trajs, double dt, bool time_avg) {
  Vec out;
  out.reserve(trajs.size());
  for (const Trajectory& tr : trajs) {
    const Vec curve = normalized_error_curve(tr);
    out.push_back(time_avg ? auc_time_avg(curve, dt) : auc(curve, dt));
  }
  return out;
}

Vec neg_rate_scores(const std::vector<Trajectory>& trajs, double dt) {
  std::vector<Vec> curves;
  curves.reserve(trajs.size());
  for (const Trajectory& tr : trajs) curves.push_back(normalized_error_curve(tr));
  const ConvergenceFit fit = fit_convergence(curves, dt);
  Vec out = fit.rates;
  for (auto& r : out) r = -r;
  return out;
}

void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ParseError("save_trajectory_csv: cannot open " + path);
  const int n = traj.x.empty() ? 0 : static_cast<int>(traj.x[0].size());
  const int m = traj.u.empty() ? 0 : static_cast<int>(traj.u[0].size());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= n; ++i) out << ",xstar_" << i;
  for (int i = 1; i <= m; ++i) out << ",u_" << i;
  for (int i = 1; i <= m; ++i) out << ",ustar_" << i;
  for (int i = 1; i <= n; ++i) out << ",d_" << i;
  out << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    out << traj.t[k];
    for (double v : traj.x[k]) out << ',' << v;
    for (double v : traj.xstar[k]) out << ',' << v;
    for (double v : traj.u[k]) out << ',' << v;
    for (double v : traj.ustar[k]) out << ',' << v;
    for (double v : traj.d[k]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace ccm
