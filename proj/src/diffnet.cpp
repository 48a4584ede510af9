#include "ccm/diffnet.hpp"

#include <cmath>

namespace ccm {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ContractViolation(msg);
}

// A * B^T and A^T * B without forming the transpose.
Mat mul_nt(const Mat& a, const Mat& b) {
  Mat r(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.rows; ++j) {
      const double* ai = &a.a[static_cast<std::size_t>(i) * a.cols];
      const double* bj = &b.a[static_cast<std::size_t>(j) * b.cols];
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      r(i, j) = s;
    }
  return r;
}

Mat mul_tn(const Mat& a, const Mat& b) {
  Mat r(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* ak = &a.a[static_cast<std::size_t>(k) * a.cols];
    const double* bk = &b.a[static_cast<std::size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      const double s = ak[i];
      if (s == 0.0) continue;
      double* ri = &r.a[static_cast<std::size_t>(i) * r.cols];
      for (int j = 0; j < b.cols; ++j) ri[j] += s * bk[j];
    }
  }
  return r;
}

}  // namespace

Mlp2 Mlp2::init(int in, int hidden, int out, Rng& rng) {
  Mlp2 net;
  net.in_dim = in;
  net.hidden_dim = hidden;
  net.out_dim = out;
  net.w1 = Mat(hidden, in);
  net.b1 = Mat(hidden, 1);
  net.w2 = Mat(out, hidden);
  net.b2 = Mat(out, 1);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& v : net.w1.a) v = rng.uniform(-s1, s1);
  for (auto& v : net.b1.a) v = rng.uniform(-s1, s1);
  for (auto& v : net.w2.a) v = rng.uniform(-s2, s2);
  for (auto& v : net.b2.a) v = rng.uniform(-s2, s2);
  return net;
}

Mlp2 Mlp2::zeros(int in, int hidden, int out) {
  Mlp2 net;
  net.in_dim = in;
  net.hidden_dim = hidden;
  net.out_dim = out;
  net.w1 = Mat(hidden, in);
  net.b1 = Mat(hidden, 1);
  net.w2 = Mat(out, hidden);
  net.b2 = Mat(out, 1);
  return net;
}

Vec mlp2_forward(const Mlp2& net, const Vec& x) {
  require(static_cast<int>(x.size()) == net.in_dim, "mlp2_forward: input size mismatch");
  Vec h(static_cast<std::size_t>(net.hidden_dim));
  for (int i = 0; i < net.hidden_dim; ++i) {
    const double* wi = &net.w1.a[static_cast<std::size_t>(i) * net.in_dim];
    double s = 0.0;
    for (int k = 0; k < net.in_dim; ++k) s += wi[k] * x[static_cast<std::size_t>(k)];
    h[static_cast<std::size_t>(i)] = std::tanh(s + net.b1.a[static_cast<std::size_t>(i)]);
  }
  Vec y(static_cast<std::size_t>(net.out_dim));
  for (int i = 0; i < net.out_dim; ++i) {
    const double* wi = &net.w2.a[static_cast<std::size_t>(i) * net.hidden_dim];
    double s = 0.0;
    for (int k = 0; k < net.hidden_dim; ++k) s += wi[k] * h[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s + net.b2.a[static_cast<std::size_t>(i)];
  }
  return y;
}

Mat mlp2_input_jacobian(const Mlp2& net, const Vec& x) {
  require(static_cast<int>(x.size()) == net.in_dim, "mlp2_input_jacobian: input size mismatch");
  Vec dz(static_cast<std::size_t>(net.hidden_dim));
  for (int i = 0; i < net.hidden_dim; ++i) {
    const double* wi = &net.w1.a[static_cast<std::size_t>(i) * net.in_dim];
    double s = 0.0;
    for (int k = 0; k < net.in_dim; ++k) s += wi[k] * x[static_cast<std::size_t>(k)];
    const double t = std::tanh(s + net.b1.a[static_cast<std::size_t>(i)]);
    dz[static_cast<std::size_t>(i)] = 1.0 - t * t;
  }
  // J = w2 diag(dz) w1
  Mat j(net.out_dim, net.in_dim);
  for (int o = 0; o < net.out_dim; ++o) {
    const double* w2o = &net.w2.a[static_cast<std::size_t>(o) * net.hidden_dim];
    double* jo = &j.a[static_cast<std::size_t>(o) * net.in_dim];
    for (int h = 0; h < net.hidden_dim; ++h) {
      const double f = w2o[h] * dz[static_cast<std::size_t>(h)];
      if (f == 0.0) continue;
      const double* w1h = &net.w1.a[static_cast<std::size_t>(h) * net.in_dim];
      for (int i = 0; i < net.in_dim; ++i) jo[i] += f * w1h[i];
    }
  }
  return j;
}

std::vector<Mat> ParamRefs::zeros_like() const {
  std::vector<Mat> out;
  out.reserve(arrays.size());
  for (const Mat* m : arrays) out.emplace_back(m->rows, m->cols);
  return out;
}

std::size_t ParamRefs::scalar_count() const {
  std::size_t n = 0;
  for (const Mat* m : arrays) n += m->size();
  return n;
}

MlpSlots register_mlp(ParamRefs& ps, Mlp2& net) {
  MlpSlots s;
  s.w1 = ps.add(&net.w1);
  s.b1 = ps.add(&net.b1);
  s.w2 = ps.add(&net.w2);
  s.b2 = ps.add(&net.b2);
  return s;
}

AdamState AdamState::init(const ParamRefs& params, double lr) {
  AdamState st;
  st.m = params.zeros_like();
  st.v = params.zeros_like();
  st.lr = lr;
  return st;
}

void adam_step(ParamRefs& params, const std::vector<Mat>& grads, AdamState& st) {
  require(grads.size() == params.arrays.size(), "adam_step: gradient count mismatch");
  st.t += 1;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t k = 0; k < params.arrays.size(); ++k) {
    Mat& p = *params.arrays[k];
    const Mat& g = grads[k];
    require(p.same_shape(g), "adam_step: gradient shape mismatch");
    Mat& m = st.m[k];
    Mat& v = st.v[k];
    for (std::size_t i = 0; i < p.a.size(); ++i) {
      m.a[i] = st.beta1 * m.a[i] + (1.0 - st.beta1) * g.a[i];
      v.a[i] = st.beta2 * v.a[i] + (1.0 - st.beta2) * g.a[i] * g.a[i];
      const double mhat = m.a[i] / c1;
      const double vhat = v.a[i] / c2;
      p.a[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  arg_pool_.clear();
  param_cache_.assign(params_ ? params_->arrays.size() : 0, -1);
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Mat& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.op == Op::Param) return *params_->arrays[static_cast<std::size_t>(n.param_slot)];
  return n.val;
}

int Tape::param(int slot) {
  require(params_ != nullptr && slot >= 0 &&
              slot < static_cast<int>(params_->arrays.size()),
          "tape: bad parameter slot");
  int& cached = param_cache_[static_cast<std::size_t>(slot)];
  if (cached >= 0) return cached;
  Node n;
  n.op = Op::Param;
  n.param_slot = slot;
  const Mat& p = *params_->arrays[static_cast<std::size_t>(slot)];
  n.out_rows = p.rows;
  n.out_cols = p.cols;
  cached = push(std::move(n));
  return cached;
}

int Tape::constant(Mat m) {
  Node n;
  n.op = Op::Const;
  n.out_rows = m.rows;
  n.out_cols = m.cols;
  n.val = std::move(m);
  return push(std::move(n));
}

int Tape::add(int x, int y) {
  Node n;
  n.op = Op::Add;
  n.x = x;
  n.y = y;
  n.val = value(x) + value(y);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::sub(int x, int y) {
  Node n;
  n.op = Op::Sub;
  n.x = x;
  n.y = y;
  n.val = value(x) - value(y);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::neg(int x) {
  Node n;
  n.op = Op::Neg;
  n.x = x;
  n.val = -value(x);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::matmul(int x, int y) {
  Node n;
  n.op = Op::MatMul;
  n.x = x;
  n.y = y;
  n.val = value(x) * value(y);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::transpose_node(int x) {
  Node n;
  n.op = Op::Transpose;
  n.x = x;
  n.val = transpose(value(x));
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::scale(double alpha, int x) {
  Node n;
  n.op = Op::ScaleConst;
  n.x = x;
  n.alpha = alpha;
  n.val = alpha * value(x);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::scalar_mul(int s, int x) {
  require(value(s).rows == 1 && value(s).cols == 1, "scalar_mul: scalar operand not 1x1");
  Node n;
  n.op = Op::ScalarMul;
  n.x = s;
  n.y = x;
  n.val = value(s)(0, 0) * value(x);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::hadamard(int x, int y) {
  require(value(x).same_shape(value(y)), "hadamard: shape mismatch");
  Node n;
  n.op = Op::Hadamard;
  n.x = x;
  n.y = y;
  n.val = value(x);
  for (std::size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] *= value(y).a[i];
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::colscale(int x, int v) {
  const Mat& xv = value(x);
  const Mat& vv = value(v);
  require(vv.cols == 1 && vv.rows == xv.cols, "colscale: scale vector shape mismatch");
  Node n;
  n.op = Op::ColScale;
  n.x = x;
  n.y = v;
  n.val = xv;
  for (int i = 0; i < xv.rows; ++i)
    for (int j = 0; j < xv.cols; ++j) n.val(i, j) *= vv.a[static_cast<std::size_t>(j)];
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::tanh_node(int x) {
  Node n;
  n.op = Op::Tanh;
  n.x = x;
  n.val = value(x);
  for (auto& e : n.val.a) e = std::tanh(e);
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::dtanh_node(int x) {
  Node n;
  n.op = Op::DTanh;
  n.x = x;
  n.val = value(x);
  for (auto& e : n.val.a) {
    const double t = std::tanh(e);
    e = 1.0 - t * t;
  }
  n.out_rows = n.val.rows;
  n.out_cols = n.val.cols;
  return push(std::move(n));
}

int Tape::reshape(int x, int r, int c) {
  const Mat& xv = value(x);
  require(static_cast<std::size_t>(r) * c == xv.size(), "reshape: element count mismatch");
  Node n;
  n.op = Op::Reshape;
  n.x = x;
  n.val = Mat(r, c, xv.a);
  n.out_rows = r;
  n.out_cols = c;
  return push(std::move(n));
}

int Tape::concat_cols(const std::vector<int>& xs) {
  require(!xs.empty(), "concat_cols: no operands");
  int rows = value(xs[0]).rows, cols = 0;
  for (int id : xs) {
    require(value(id).rows == rows, "concat_cols: row mismatch");
    cols += value(id).cols;
  }
  Node n;
  n.op = Op::ConcatCols;
  n.args_begin = static_cast<int>(arg_pool_.size());
  n.args_len = static_cast<int>(xs.size());
  arg_pool_.insert(arg_pool_.end(), xs.begin(), xs.end());
  n.val = Mat(rows, cols);
  int at = 0;
  for (int id : xs) {
    const Mat& b = value(id);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < b.cols; ++j) n.val(i, at + j) = b(i, j);
    at += b.cols;
  }
  n.out_rows = rows;
  n.out_cols = cols;
  return push(std::move(n));
}

int Tape::sum_all(int x) {
  Node n;
  n.op = Op::SumAll;
  n.x = x;
  double s = 0.0;
  for (double v : value(x).a) s += v;
  n.val = Mat(1, 1, {s});
  n.out_rows = n.out_cols = 1;
  return push(std::move(n));
}

int Tape::hinge_quad(int x, const std::vector<Vec>* probes, double margin) {
  const Mat& xv = value(x);
  require(xv.rows == xv.cols, "hinge_quad: matrix not square");
  require(probes != nullptr && !probes->empty(), "hinge_quad: no probe vectors");
  Node n;
  n.op = Op::HingeQuad;
  n.x = x;
  n.probes = probes;
  n.margin = margin;
  double s = 0.0;
  for (const Vec& p : *probes) {
    double q = 0.0;
    for (int i = 0; i < xv.rows; ++i) {
      const double* xi = &xv.a[static_cast<std::size_t>(i) * xv.cols];
      double row = 0.0;
      for (int j = 0; j < xv.cols; ++j) row += xi[j] * p[static_cast<std::size_t>(j)];
      q += p[static_cast<std::size_t>(i)] * row;
    }
    const double h = margin - q;
    if (h > 0.0) s += h;
  }
  s /= static_cast<double>(probes->size());
  n.val = Mat(1, 1, {s});
  n.out_rows = n.out_cols = 1;
  return push(std::move(n));
}

int Tape::frob_norm(int x) {
  Node n;
  n.op = Op::FrobNorm;
  n.x = x;
  n.val = Mat(1, 1, {frobenius_norm(value(x))});
  n.out_rows = n.out_cols = 1;
  return push(std::move(n));
}

void Tape::bump(int id, const Mat& g) {
  if (!has_grad_[static_cast<std::size_t>(id)]) {
    grads_[static_cast<std::size_t>(id)] = g;
    has_grad_[static_cast<std::size_t>(id)] = 1;
  } else {
    Mat& acc = grads_[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += g.a[i];
  }
}

void Tape::backward(int root, std::vector<Mat>& grads, double seed) {
  const Node& rn = nodes_[static_cast<std::size_t>(root)];
  require(rn.out_rows == 1 && rn.out_cols == 1, "backward: root is not scalar");
  grads_.assign(nodes_.size(), Mat());
  has_grad_.assign(nodes_.size(), 0);
  bump(root, Mat(1, 1, {seed}));

  for (int id = root; id >= 0; --id) {
    if (!has_grad_[static_cast<std::size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Mat& g = grads_[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::Const:
      case Op::Param:
        break;
      case Op::Add:
        bump(n.x, g);
        bump(n.y, g);
        break;
      case Op::Sub:
        bump(n.x, g);
        bump(n.y, -g);
        break;
      case Op::Neg:
        bump(n.x, -g);
        break;
      case Op::MatMul:
        bump(n.x, mul_nt(g, value(n.y)));
        bump(n.y, mul_tn(value(n.x), g));
        break;
      case Op::Transpose:
        bump(n.x, transpose(g));
        break;
      case Op::ScaleConst:
        bump(n.x, n.alpha * g);
        break;
      case Op::ScalarMul: {
        const Mat& xv = value(n.y);
        double s = 0.0;
        for (std::size_t i = 0; i < xv.a.size(); ++i) s += g.a[i] * xv.a[i];
        bump(n.x, Mat(1, 1, {s}));
        bump(n.y, value(n.x)(0, 0) * g);
        break;
      }
      case Op::Hadamard: {
        Mat gx = g, gy = g;
        const Mat& xv = value(n.x);
        const Mat& yv = value(n.y);
        for (std::size_t i = 0; i < gx.a.size(); ++i) {
          gx.a[i] *= yv.a[i];
          gy.a[i] *= xv.a[i];
        }
        bump(n.x, gx);
        bump(n.y, gy);
        break;
      }
      case Op::ColScale: {
        const Mat& xv = value(n.x);
        const Mat& vv = value(n.y);
        Mat gx = g;
        Mat gv(vv.rows, 1);
        for (int i = 0; i < xv.rows; ++i)
          for (int j = 0; j < xv.cols; ++j) {
            gx(i, j) *= vv.a[static_cast<std::size_t>(j)];
            gv.a[static_cast<std::size_t>(j)] += g(i, j) * xv(i, j);
          }
        bump(n.x, gx);
        bump(n.y, gv);
        break;
      }
      case Op::Tanh: {
        Mat gx = g;
        for (std::size_t i = 0; i < gx.a.size(); ++i) {
          const double t = n.val.a[i];
          gx.a[i] *= 1.0 - t * t;
        }
        bump(n.x, gx);
        break;
      }
      case Op::DTanh: {
        const Mat& xv = value(n.x);
        Mat gx = g;
        for (std::size_t i = 0; i < gx.a.size(); ++i) {
          const double t = std::tanh(xv.a[i]);
          gx.a[i] *= -2.0 * t * (1.0 - t * t);
        }
        bump(n.x, gx);
        break;
      }
      case Op::Reshape: {
        const Mat& xv = value(n.x);
        bump(n.x, Mat(xv.rows, xv.cols, g.a));
        break;
      }
      case Op::ConcatCols: {
        int at = 0;
        for (int k = 0; k < n.args_len; ++k) {
          const int cid = arg_pool_[static_cast<std::size_t>(n.args_begin + k)];
          const Mat& b = value(cid);
          Mat gb(b.rows, b.cols);
          for (int i = 0; i < b.rows; ++i)
            for (int j = 0; j < b.cols; ++j) gb(i, j) = g(i, at + j);
          bump(cid, gb);
          at += b.cols;
        }
        break;
      }
      case Op::SumAll: {
        const Mat& xv = value(n.x);
        Mat gx(xv.rows, xv.cols);
        for (auto& e : gx.a) e = g(0, 0);
        bump(n.x, gx);
        break;
      }
      case Op::HingeQuad: {
        const Mat& xv = value(n.x);
        Mat gx(xv.rows, xv.cols);
        const double f = -g(0, 0) / static_cast<double>(n.probes->size());
        for (const Vec& p : *n.probes) {
          double q = 0.0;
          for (int i = 0; i < xv.rows; ++i) {
            double row = 0.0;
            for (int j = 0; j < xv.cols; ++j) row += xv(i, j) * p[static_cast<std::size_t>(j)];
            q += p[static_cast<std::size_t>(i)] * row;
          }
          if (n.margin - q > 0.0) {
            for (int i = 0; i < xv.rows; ++i)
              for (int j = 0; j < xv.cols; ++j)
                gx(i, j) += f * p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j)];
          }
        }
        bump(n.x, gx);
        break;
      }
      case Op::FrobNorm: {
        const double nv = n.val(0, 0);
        if (nv > 0.0) bump(n.x, (g(0, 0) / nv) * value(n.x));
        break;
      }
    }
  }

  for (std::size_t slot = 0; slot < param_cache_.size(); ++slot) {
    const int id = param_cache_[slot];
    if (id < 0 || !has_grad_[static_cast<std::size_t>(id)]) continue;
    Mat& out = grads[slot];
    const Mat& g = grads_[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += g.a[i];
  }
}

int tape_mlp_forward(Tape& t, const MlpSlots& s, int x_node, int* z_out) {
  const int z = t.add(t.matmul(t.param(s.w1), x_node), t.param(s.b1));
  if (z_out) *z_out = z;
  const int h = t.tanh_node(z);
  return t.add(t.matmul(t.param(s.w2), h), t.param(s.b2));
}

int tape_mlp_jacobian(Tape& t, const MlpSlots& s, int z_node, int in_sel_node) {
  const int dz = t.dtanh_node(z_node);
  const int scaled = t.colscale(t.param(s.w2), dz);
  const int w1 = (in_sel_node >= 0) ? t.matmul(t.param(s.w1), in_sel_node) : t.param(s.w1);
  return t.matmul(scaled, w1);
}

}  // namespace ccm
