#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccm/certloss.hpp"
#include "ccm/dynamics.hpp"

namespace ccm {

// Where a reported constant comes from. Any sampled entry downgrades a
// certificate from unconditional to "certified modulo the sampled bounds".
enum class BoundSource { kAnalytic, kSpectralBound, kSampled };
const char* bound_source_name(BoundSource s);

struct BoundEntry {
  double value = 0.0;
  BoundSource source = BoundSource::kAnalytic;
};

// Constants of the closed-loop contraction eigenvalue as a function of the
// joint point (x, x*, u*): Lipschitz constants l_* and 2-norm sups s_*.
struct LipschitzBreakdown {
  BoundEntry l_mdot, l_m, l_a, l_b, l_k;
  BoundEntry s_m, s_a, s_b, s_k;
};

// Lipschitz constant of lambda_max of the primal contraction matrix:
//   L = l_mdot + 2 (s_m l_a + s_a l_m + s_m s_b l_k + s_b s_k l_m
//                   + s_m s_k l_b + rate l_m)
double composite_lipschitz(const LipschitzBreakdown& b, double rate);

// ||w2||_2 ||w1||_2 bounds the network's Lipschitz constant since tanh
// slopes never exceed one. Looser than an SDP certificate but exact to
// evaluate and dependency free.
double network_lipschitz(const Mlp2& net);

// Supremum estimate from `count` uniform draws. The bound adds
// inflation * cover_radius, where cover_radius is the covering radius a
// uniform grid with the same budget would achieve; with inflation at a
// valid Lipschitz constant of g this compensates for the gaps between
// samples, but the result is still an estimate, not a guarantee.
struct SampledBound {
  double max_sample = 0.0;
  double cover_radius = 0.0;
  double bound = 0.0;
};
SampledBound sampled_bounds(const std::function<double(const Vec&)>& g, const Box& region,
                            int count, std::uint64_t seed, double inflation = 0.0);

// Constants of the state feedback K = du/dx for the simple architecture
// u = k(x, x*)(x - x*) + u*, assembled from layer norms, the per-axis sups
// of x - x* over err_box, and the tanh-slope Lipschitz constant.
// l_gain and s_gain describe the gain network k itself.
struct ControllerConstants {
  double l_k = 0.0;
  double s_k = 0.0;
  double l_gain = 0.0;
  double s_gain = 0.0;
};
ControllerConstants controller_constants_simple(const ControllerNet& cn, const Box& err_box);

// Metric-side constants on a state region. s_m and m_hi are exact from the
// floor (W >= w_floor I); s_c and m_lo come from inflated sampling, and
// l_w <= 2 s_c l_c via the product rule on W = C^T C + w_floor I.
struct MetricConstants {
  double l_c = 0.0;
  double s_c = 0.0;
  double l_w = 0.0;
  double l_m = 0.0;
  double s_m = 0.0;
  double m_lo = 0.0;
  double m_hi = 0.0;
};
MetricConstants metric_constants(const MetricNet& mn, const Box& state_box, int count,
                                 std::uint64_t seed);

// Dynamics-side constants. Dubins gets closed-form values (constant input
// matrix, velocity-bounded Jacobian); every other system falls back to
// sampled finite differences along the closed loop, tagged accordingly.
struct SystemConstants {
  BoundEntry l_a, s_a, l_b, s_b;
};
SystemConstants system_constants(const SystemModel& sys, const ControllerNet& cn,
                                 const Box& err_box, int count, std::uint64_t seed);

// d/dt of the primal metric along the closed loop, -M Wdot M.
Mat closed_loop_mdot(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                     const Vec& x, const Vec& xs, const Vec& us);

// Sampled Lipschitz estimate of (x, x*, u*) -> Mdot: the largest stacked
// directional-derivative norm over `count` draws, inflated by headroom.
double mdot_lipschitz(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                      const Box& err_box, int count, std::uint64_t seed, double headroom = 1.5);

enum class Verdict { kCertified, kRefuted, kInconclusive };
const char* verdict_name(Verdict v);

struct CertificateReport {
  std::vector<Box> region;  // boxes gridded jointly; for certify: x*, x - x*, u*
  double rate = 0.0;
  double tau = 0.0;
  double lipschitz = 0.0;
  LipschitzBreakdown breakdown;
  long grid_points = 0;
  double worst_value = 0.0;  // max of the evaluator over the grid
  double margin = 0.0;       // -lipschitz * tau
  Verdict verdict = Verdict::kInconclusive;
  Vec counterexample;  // grid point with value >= 0, empty unless refuted
  double m_lo = 0.0;
  double m_hi = 0.0;
  std::string bound_method;
  std::string note;
};

// Grid check of g < 0 on a product of boxes: a uniform grid whose covering
// radius is tau certifies when every grid value is below -lipschitz * tau,
// refutes at the first grid point with a nonnegative value, and is
// inconclusive otherwise. The verdict does not depend on worker count.
CertificateReport grid_verify(const std::function<double(const Vec&)>& g,
                              const std::vector<Box>& region, double tau, double lipschitz,
                              int workers = 1, long grid_cap = 20000000);

struct CertifyConfig {
  double rate = 0.0;  // 0 means the system's default training rate
  double tau = 1e-3;
  double err_halfwidth = 0.1;  // per-axis bound on x - x* in the checked region
  int sample_count = 10000;
  std::uint64_t seed = 0;
  double mdot_headroom = 1.5;
  int workers = 1;
  long grid_cap = 20000000;
};

// End-to-end certificate for a trained model: assembles the Lipschitz
// breakdown, grids (x*, x - x*, u*) jointly, and checks the largest
// eigenvalue of the primal contraction matrix against -L tau. Requires the
// simple controller architecture; the bottleneck form has no closed-form
// feedback constants and only gets statistical evaluation.
CertificateReport certify(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                          const CertifyConfig& cfg);

struct TubeBound {
  double r0 = 0.0;  // metric distance bound between the two starts
  double eps = 0.0;
  double rate = 0.0;
  double m_lo = 0.0;
  double m_hi = 0.0;

  double at(double t) const;
};

// Disturbance tube around an unperturbed trajectory:
//   bound(t) = r0 / sqrt(m_lo) e^{-rate t}
//            + sqrt(m_hi / m_lo) (eps / rate) (1 - e^{-rate t})
// with r0 = sqrt(m_hi) ||x1_0 - x2_0||, the straight-line bound on the
// metric distance between the initial states.
TubeBound tube_bound(double m_lo, double m_hi, double rate, double eps, const Vec& x1_0,
                     const Vec& x2_0);

}  // namespace ccm
