#pragma once

#include <vector>

#include "ccm/diffnet.hpp"
#include "ccm/dynamics.hpp"

namespace ccm {

// Dual metric W(x) = C(x)^T C(x) + w_floor I, so W is symmetric positive
// definite by construction for any parameters.
//
// When the sparsity mask is active, C is assembled block-triangularly:
//   C = [[C11(x_head), C12(x)], [0, C22(x)]]
// with C11 produced by a separate network reading only the first n-m state
// components. The top-left (n-m) block of W is then C11^T C11 + w_floor I,
// independent of the last m components, which makes the second CCM condition
// hold identically for systems with B = [0; b(x)].
struct MetricNet {
  int n = 0;
  int m = 0;  // meaningful only when masked
  bool masked = false;
  double w_floor = 0.1;
  double w_ceil = 10.0;
  Mlp2 c_main;  // n -> n*n
  Mlp2 c_bot;   // (n-m) -> (n-m)^2, present only when masked

  static MetricNet init(int n, int m, bool masked, int hidden, Rng& rng);
};

Mat metric_factor(const MetricNet& mn, const Vec& x);  // C(x), n x n
Mat dual_metric(const MetricNet& mn, const Vec& x);    // W(x)
std::vector<Mat> dual_metric_grad(const MetricNet& mn, const Vec& x);  // dW/dx_i

// Tracking controller. Both architectures scale the error x - x*, so
// u(x, x, u*) = u* holds exactly for any parameters.
//   bottleneck: u = w2(x,x*) tanh(w1(x,x*) (x - x*)) + u*
//   simple:     u = k(x,x*) (x - x*) + u*
struct ControllerNet {
  enum class Arch { kBottleneck, kSimple };
  Arch arch = Arch::kBottleneck;
  int n = 0, m = 0;
  int bottleneck = 32;
  Mlp2 net_a;  // bottleneck: 2n -> c*n (w1) | simple: 2n -> m*n (k)
  Mlp2 net_b;  // bottleneck: 2n -> m*c (w2) | simple: unused

  static ControllerNet init(Arch arch, int n, int m, int hidden, int bottleneck, Rng& rng);
};

struct ControlEval {
  Vec u;
  Mat k;  // du/dx at fixed (x*, u*), m x n
};
ControlEval eval_controller(const ControllerNet& cn, const Vec& x, const Vec& xs, const Vec& us);

// A(x, u) = df/dx + sum_j u^j db_j/dx.
Mat generalized_jacobian(const DynamicsEval& ev, const Vec& u);
Mat generalized_jacobian(const SystemModel& sys, const Vec& x, const Vec& u);

// Dual-form contraction matrix along the closed loop,
//   D = -Wdot + (A+BK) W + W (A+BK)^T + 2 lambda W,
// with Wdot = sum_i dW/dx_i xdot_i. Negative definite iff the primal
// contraction condition holds (congruence: D = W C_u W).
Mat contraction_matrix_dual(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                            double rate, const Vec& x, const Vec& xs, const Vec& us);

// Primal form C_u = Mdot + M(A+BK) + (M(A+BK))^T + 2 lambda M, M = W^-1,
// Mdot = -M Wdot M. Used for verification; throws if W cannot be inverted.
Mat contraction_matrix_primal(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                              double rate, const Vec& x, const Vec& xs, const Vec& us);

// First CCM condition (controls projected out):
//   B_perp^T (-d_f W + (df/dx W) + (df/dx W)^T + 2 lambda W) B_perp
Mat ccm_condition_c1(const SystemModel& sys, const MetricNet& mn, double rate, const Vec& x);

// Second CCM condition for control column j:
//   B_perp^T (d_{b_j} W - (db_j/dx W) - (db_j/dx W)^T) B_perp
Mat ccm_condition_c2(const SystemModel& sys, const MetricNet& mn, const Vec& x, int j);

// Sampled positive-definiteness hinge: (1/K) sum_i max{0, margin - p_i^T a p_i}.
double l_pd(const Mat& a, const std::vector<Vec>& probes, double margin = 0.0);

struct LossConfig {
  double rate = 0.5;
  int k_pd = 64;
  double margin = 0.0;
  double w_contraction = 1.0;   // L_PD(-D)
  double w_strong = 1.0;        // L_PD(-C1)
  double w_killing = 1.0;       // sum_j ||C2_j||_F
  double w_conditioning = 1.0;  // L_PD(w_ceil I - W)
  // With the sparsity mask the C2 term vanishes identically and the C1/C2
  // terms are dropped from the risk.
  bool drop_structured = false;
};

struct Sample {
  Vec x, xs, us;
};

struct LossTerms {
  double contraction = 0.0;
  double strong = 0.0;
  double killing = 0.0;
  double conditioning = 0.0;
  double total = 0.0;
};

// Probe vectors used by one risk evaluation: dim-n probes for D and the
// conditioning term, dim-(n-m) probes for C1.
struct ProbeSet {
  std::vector<Vec> dim_n;
  std::vector<Vec> dim_sub;

  static ProbeSet draw(int n, int n_sub, int count, Rng& rng);
};

// Mean risk over a batch, no gradients. Probes are supplied by the caller so
// gradient checks can freeze them.
LossTerms empirical_risk(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                         const LossConfig& cfg, const std::vector<Sample>& batch,
                         const ProbeSet& probes);

// Everything the optimizer touches, with slot bookkeeping for the tape.
// ParamRefs point into the nets, so the bundle is pinned in memory.
struct NetBundle {
  MetricNet metric;
  ControllerNet ctrl;
  ParamRefs refs;
  MlpSlots s_main, s_bot, s_a, s_b;

  NetBundle() = default;
  NetBundle(const NetBundle&) = delete;
  NetBundle& operator=(const NetBundle&) = delete;

  // Rebuilds refs and slots from the current nets. Registration order
  // (metric main, metric bottom, controller a, controller b) is relied on
  // by checkpoint serialization.
  void wire();
};

void init_bundle(NetBundle& nets, const SystemModel& sys, ControllerNet::Arch arch, bool masked,
                 int hidden, int bottleneck, Rng& rng);

// Node ids of the per-term scalars inside one sample's risk graph; -1 for
// terms that were dropped.
struct RiskNodes {
  int contraction = -1;
  int strong = -1;
  int killing = -1;
  int conditioning = -1;
};

// Builds the per-sample risk of one Sample on the tape; returns the scalar
// root node. Values match empirical_risk on the same sample bit for bit.
int build_sample_risk(Tape& tape, const NetBundle& nets, const SystemModel& sys,
                      const LossConfig& cfg, const Sample& sample, const ProbeSet& probes,
                      RiskNodes* nodes = nullptr);

}  // namespace ccm
