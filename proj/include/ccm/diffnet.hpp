#pragma once

#include <cstdint>
#include <vector>

#include "ccm/mat.hpp"
#include "ccm/rng.hpp"

namespace ccm {

// Largest slope of tanh' over the reals, i.e. max |tanh''| = 4/(3*sqrt(3)).
inline constexpr double kDTanhLipschitz = 0.7698003589195010;

// Two-layer perceptron y = w2 * tanh(w1 x + b1) + b2.
struct Mlp2 {
  int in_dim = 0;
  int hidden_dim = 0;
  int out_dim = 0;
  Mat w1, b1, w2, b2;  // b1: hidden x 1, b2: out x 1

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) entries, drawn in the order
  // w1 (row major), b1, w2, b2 so that initialization is seed-stable.
  static Mlp2 init(int in, int hidden, int out, Rng& rng);
  static Mlp2 zeros(int in, int hidden, int out);
};

Vec mlp2_forward(const Mlp2& net, const Vec& x);
// Jacobian dy/dx, out_dim x in_dim: w2 diag(tanh'(w1 x + b1)) w1.
Mat mlp2_input_jacobian(const Mlp2& net, const Vec& x);

// Registry of the tunable arrays being optimized. Entries point into Mlp2
// instances owned by the caller; those must outlive the ParamRefs.
struct ParamRefs {
  std::vector<Mat*> arrays;

  int add(Mat* m) {
    arrays.push_back(m);
    return static_cast<int>(arrays.size()) - 1;
  }
  std::vector<Mat> zeros_like() const;
  std::size_t scalar_count() const;
};

// Slot indices of one Mlp2 inside a ParamRefs.
struct MlpSlots {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};
MlpSlots register_mlp(ParamRefs& ps, Mlp2& net);

struct AdamState {
  std::vector<Mat> m, v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(const ParamRefs& params, double lr);
};

// One bias-corrected Adam update, applied in place through the ParamRefs.
void adam_step(ParamRefs& params, const std::vector<Mat>& grads, AdamState& st);

// Reverse-mode tape over matrix-valued nodes. The graph is rebuilt per
// sample (structures are data dependent only through constants), evaluated
// eagerly on construction, and differentiated by a single reverse sweep.
class Tape {
 public:
  enum class Op : std::uint8_t {
    Const,
    Param,
    Add,
    Sub,
    Neg,
    MatMul,
    Transpose,
    ScaleConst,  // alpha * x
    ScalarMul,   // (1x1 scalar node) * x
    Hadamard,
    ColScale,  // out[i][j] = x[i][j] * v[j], v a column vector node
    Tanh,
    DTanh,  // elementwise tanh'(x) = 1 - tanh(x)^2
    Reshape,
    ConcatCols,  // n-ary horizontal concatenation
    SumAll,      // 1x1 sum of all entries
    HingeQuad,   // 1x1: (1/K) sum_i max(0, margin - p_i^T X p_i)
    FrobNorm,    // 1x1 Frobenius norm
  };

  explicit Tape(const ParamRefs* params) : params_(params) { reset(); }

  void reset();

  int param(int slot);
  int constant(Mat m);
  int add(int x, int y);
  int sub(int x, int y);
  int neg(int x);
  int matmul(int x, int y);
  int transpose_node(int x);
  int scale(double alpha, int x);
  int scalar_mul(int s, int x);
  int hadamard(int x, int y);
  int colscale(int x, int v);
  int tanh_node(int x);
  int dtanh_node(int x);
  int reshape(int x, int r, int c);
  int concat_cols(const std::vector<int>& xs);
  int sum_all(int x);
  int hinge_quad(int x, const std::vector<Vec>* probes, double margin);
  int frob_norm(int x);

  const Mat& value(int id) const;
  double scalar(int id) const { return value(id)(0, 0); }
  std::size_t node_count() const { return nodes_.size(); }

  // Reverse sweep from a 1x1 root seeded with `seed`; parameter gradients
  // are accumulated (+=) into grads, which must be shaped like the refs.
  void backward(int root, std::vector<Mat>& grads, double seed = 1.0);

 private:
  struct Node {
    Op op;
    int x = -1, y = -1;
    int args_begin = 0, args_len = 0;
    double alpha = 0.0;
    int out_rows = 0, out_cols = 0;
    int param_slot = -1;
    const std::vector<Vec>* probes = nullptr;
    double margin = 0.0;
    Mat val;  // empty for Param nodes, whose value lives in the ParamRefs
  };

  int push(Node n);
  const ParamRefs* params_;
  std::vector<Node> nodes_;
  std::vector<int> arg_pool_;
  std::vector<int> param_cache_;
  std::vector<Mat> grads_;
  std::vector<char> has_grad_;
  void bump(int id, const Mat& g);
};

// Forward pass of an Mlp2 on the tape for a (node) input column vector.
// Returns the output node; *z_out receives the pre-activation node, reused
// by the Jacobian builder.
int tape_mlp_forward(Tape& t, const MlpSlots& s, int x_node, int* z_out);

// Input Jacobian restricted to columns selected by in_sel (a constant
// in_dim x k matrix node, or -1 for the full Jacobian):
//   J = colscale(w2, tanh'(z)) * (w1 * in_sel)
int tape_mlp_jacobian(Tape& t, const MlpSlots& s, int z_node, int in_sel_node = -1);

}  // namespace ccm
