#pragma once

#include <string>
#include <vector>

#include "ccm/certloss.hpp"
#include "ccm/dynamics.hpp"

namespace ccm {

// Sinusoid-mix reference inputs: per control axis,
//   u*_k(t) = clip(center_k + sum_f w_{k,f} sin(2 pi f t))
// with each weight uniform in +-(weight_scale * halfwidth_k / #frequencies),
// so the unclipped sum stays near the control box.
struct ReferenceSpec {
  std::vector<double> frequencies{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double weight_scale = 1.0;
  double horizon = 10.0;
  double dt = 0.01;
  int max_retries = 50;
};

ReferenceSpec default_reference_spec(const SystemModel& sys);

struct Reference {
  std::vector<double> t;
  std::vector<Vec> x;  // x*(t_k)
  std::vector<Vec> u;  // u*(t_k), held over [t_k, t_{k+1})
};

struct DisturbanceSpec {
  double sigma = 0.0;
};

// Piecewise-constant disturbance: piece lengths uniform in [0,1] time units,
// magnitudes uniform in [0, sigma], directions uniform on the unit sphere.
struct Disturbance {
  double sigma = 0.0;
  int dim = 0;
  std::vector<double> start;  // ascending, first entry 0
  std::vector<Vec> value;

  Vec at(double time) const;
};

Disturbance gen_disturbance(const DisturbanceSpec& spec, int dim, double t_end,
                            unsigned long long seed);

// Reference generation: x*(0) uniform over the init box, x* integrated with
// the rk4 stepper under zero disturbance and zero-order-held u*. A draw whose
// states leave 1.5x the state box is regenerated from a derived seed, up to
// spec.max_retries attempts.
Reference gen_reference(const SystemModel& sys, const ReferenceSpec& spec,
                        unsigned long long seed);

enum class Stepper { kRk4, kEuler };

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x, xstar, u, ustar, d;
  bool diverged = false;
};

// Closed-loop integration on the reference grid. The controller and the
// disturbance are sampled at each step start and held across the step. A
// state leaving 3x the state box (or blowing up numerically) truncates the
// trajectory and sets the diverged flag instead of raising.
Trajectory simulate(const SystemModel& sys, const ControllerNet& cn, const Reference& ref,
                    const Disturbance& dist, const Vec& x0, Stepper stepper);

Vec error_curve(const Trajectory& traj);             // ||x - x*|| per grid point
Vec normalized_error_curve(const Trajectory& traj);  // divided by the t=0 error

double auc(const Vec& curve, double dt);           // trapezoid over the grid
double auc_time_avg(const Vec& curve, double dt);  // auc / horizon

// Smallest-area exponential envelope over a curve family: the overshoot
// C >= 1 and rate lambda with x_e(t) <= C exp(-lambda t) for every curve and
// grid point, minimizing C (1 - exp(-lambda T)) / lambda. rates[i] is the
// largest per-curve rate valid under the shared overshoot, floored at 0.
struct ConvergenceFit {
  double overshoot = 1.0;
  double lambda = 0.0;
  Vec rates;
};

ConvergenceFit fit_convergence(const std::vector<Vec>& curves, double dt);

// Split conformal quantile: q is the ceil((1-alpha)(n+1))-th order statistic
// of the scores, +infinity when that index exceeds n. A fresh i.i.d. score
// exceeds q with probability at most alpha.
struct ConformalQuantile {
  double q = 0.0;
  long index = 0;  // 1-based order-statistic index, may exceed n
};

ConformalQuantile conformal_quantile(Vec scores, double alpha);

struct RolloutConfig {
  int count = 100;
  unsigned long long seed = 0;
  double sigma = 0.0;
  Stepper stepper = Stepper::kRk4;
  ReferenceSpec ref;
  int workers = 1;
};

// Independent tracking rollouts: per index, a reference, a disturbance, and
// an initial error drawn from the error box, then one closed-loop
// simulation. Results are ordered by rollout index regardless of workers.
std::vector<Trajectory> run_rollouts(const SystemModel& sys, const ControllerNet& cn,
                                     const RolloutConfig& cfg);

Vec auc_scores(const std::vector<Trajectory>& trajs, double dt, bool time_avg);
Vec neg_rate_scores(const std::vector<Trajectory>& trajs, double dt);

void save_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace ccm
