#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccm/mat.hpp"
#include "ccm/rng.hpp"

namespace ccm {

// Axis-aligned hyper-rectangle. Degenerate axes (lo == hi) are allowed and
// denote coordinates pinned to a constant.
struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const;
  Vec halfwidth() const;
  // Membership in the box scaled about its center by `enlarge`.
  bool contains(const Vec& x, double enlarge = 1.0) const;
};

Vec sample_box(const Box& box, Rng& rng);
std::vector<Vec> sample_uniform(const Box& box, int count, Rng& rng);

// Control-affine system xdot = f(x) + B(x) u with closed-form derivatives.
struct SystemModel {
  std::string name;
  int n = 0, m = 0;
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> b;
  std::function<Mat(const Vec&)> dfdx;                // n x n
  std::function<std::vector<Mat>(const Vec&)> dbdx;   // m matrices, n x n each
  Box state_box;    // training / certification region
  Box control_box;  // reference controls
  Box init_box;     // reference initial states
  Box err_box;      // initial tracking-error offsets
  bool sparse_input = false;  // B = [0; b(x)] with invertible m x m bottom block
  double default_rate = 0.5;  // contraction rate the benchmark is trained with
};

struct DynamicsEval {
  Vec f;
  Mat b;
  Mat dfdx;
  std::vector<Mat> dbdx;
  Vec xdot;  // f + B u
};

// Evaluates the dynamics and derivatives at (x, u). Callers are expected to
// stay within the 1.5x-enlarged state box; the only hard check here is that
// every output is finite, since several benchmarks have poles outside X.
DynamicsEval eval_dynamics(const SystemModel& sys, const Vec& x, const Vec& u);

// Orthonormal basis of null(B(x)^T), i.e. B_perp with B_perp^T B(x) = 0.
// Sparse-input systems get the exact constant [I; 0]; otherwise the basis
// comes from a QR factorization of B(x).
Mat annihilator(const SystemModel& sys, const Vec& x);

const std::vector<std::string>& benchmark_names();

// The residual_seed only affects the synthetic learned-aerodynamics network
// of neural_lander; it is part of the benchmark definition, so the default
// should be left alone except in tests.
SystemModel make_benchmark(const std::string& name, std::uint64_t residual_seed = 7);

}  // namespace ccm
