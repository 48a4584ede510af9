#include "ccm/train.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include "ccm/errors.hpp"
#include "ccm/rng.hpp"

namespace ccm {

namespace {

std::string describe_sample(const Sample& s) {
  std::ostringstream os;
  os << "x=[";
  for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? "," : "") << s.x[i];
  os << "] xs=[";
  for (std::size_t i = 0; i < s.xs.size(); ++i) os << (i ? "," : "") << s.xs[i];
  os << "] us=[";
  for (std::size_t i = 0; i < s.us.size(); ++i) os << (i ? "," : "") << s.us[i];
  os << "]";
  return os.str();
}

struct TermAccum {
  LossTerms sum;
  long count = 0;

  void add(double contraction, double strong, double killing, double conditioning, double total) {
    sum.contraction += contraction;
    sum.strong += strong;
    sum.killing += killing;
    sum.conditioning += conditioning;
    sum.total += total;
    ++count;
  }
  void merge(const TermAccum& o) {
    sum.contraction += o.sum.contraction;
    sum.strong += o.sum.strong;
    sum.killing += o.sum.killing;
    sum.conditioning += o.sum.conditioning;
    sum.total += o.sum.total;
    count += o.count;
  }
  LossTerms mean() const {
    LossTerms m = sum;
    const double inv = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
    m.contraction *= inv;
    m.strong *= inv;
    m.killing *= inv;
    m.conditioning *= inv;
    m.total *= inv;
    return m;
  }
};

// One worker's pass over a contiguous index range of the shuffled batch.
struct WorkerSlice {
  std::vector<Mat> grads;
  TermAccum accum;
  long bad_index = -1;  // dataset index of the first non-finite sample
};

}  // namespace

std::vector<Sample> sample_dataset(const SystemModel& sys, int count, unsigned long long seed) {
  if (count < 1) throw ContractViolation("sample_dataset: count must be positive");
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.x = sample_box(sys.state_box, rng);
    s.xs = sample_box(sys.state_box, rng);
    s.us = sample_box(sys.control_box, rng);
    out.push_back(std::move(s));
  }
  return out;
}

TrainResult train(const SystemModel& sys, NetBundle& nets, const TrainConfig& cfg) {
  if (cfg.sample_count < 1 || cfg.epochs < 1 || cfg.batch < 1 || cfg.workers < 1)
    throw ContractViolation("train: sample_count, epochs, batch, workers must be positive");
  if (nets.metric.n != sys.n || nets.ctrl.n != sys.n || nets.ctrl.m != sys.m)
    throw ContractViolation("train: nets not wired for this system");

  LossConfig loss = cfg.loss;
  if (nets.metric.masked) loss.drop_structured = true;
  const int sub = sys.n - sys.m;
  const bool structured = !loss.drop_structured && sub > 0;

  const std::vector<Sample> data = sample_dataset(sys, cfg.sample_count, cfg.seed);
  Rng master(cfg.seed);
  Rng probe_rng = master.fork(0x70726f6265);
  Rng shuffle_rng = master.fork(0x73687566);

  AdamState adam = AdamState::init(nets.refs, cfg.lr);
  std::vector<Mat> grads = nets.refs.zeros_like();
  const int workers = cfg.workers;
  std::vector<WorkerSlice> slices(static_cast<std::size_t>(workers));
  for (auto& s : slices) s.grads = nets.refs.zeros_like();

  std::vector<long> perm(static_cast<std::size_t>(cfg.sample_count));
  for (long i = 0; i < cfg.sample_count; ++i) perm[static_cast<std::size_t>(i)] = i;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (long i = cfg.sample_count - 1; i > 0; --i) {
      const long j = static_cast<long>(shuffle_rng.uniform_int(static_cast<std::size_t>(i + 1)));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    TermAccum epoch_acc;
    for (long start = 0; start < cfg.sample_count; start += cfg.batch) {
      const long stop = std::min<long>(start + cfg.batch, cfg.sample_count);
      const long bsize = stop - start;
      const double seed_g = 1.0 / static_cast<double>(bsize);
      const ProbeSet probes =
          ProbeSet::draw(sys.n, structured ? sub : 0, loss.k_pd, probe_rng);

      auto run_slice = [&](int wid, long lo, long hi, WorkerSlice& slice) {
        Tape tape(&nets.refs);
        for (long k = lo; k < hi; ++k) {
          const Sample& s = data[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
          tape.reset();
          RiskNodes nodes;
          const int root = build_sample_risk(tape, nets, sys, loss, s, probes, &nodes);
          const double total = tape.scalar(root);
          if (!std::isfinite(total)) {
            if (slice.bad_index < 0) slice.bad_index = perm[static_cast<std::size_t>(k)];
            return;
          }
          tape.backward(root, slice.grads, seed_g);
          slice.accum.add(tape.scalar(nodes.contraction),
                          nodes.strong >= 0 ? tape.scalar(nodes.strong) : 0.0,
                          nodes.killing >= 0 ? tape.scalar(nodes.killing) : 0.0,
                          tape.scalar(nodes.conditioning), total);
        }
        (void)wid;
      };

      for (auto& g : grads)
        for (auto& v : g.a) v = 0.0;
      if (workers == 1) {
        for (auto& g : slices[0].grads)
          for (auto& v : g.a) v = 0.0;
        slices[0].accum = TermAccum{};
        slices[0].bad_index = -1;
        run_slice(0, start, stop, slices[0]);
      } else {
        std::vector<std::thread> pool;
        const long chunk = (bsize + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
          WorkerSlice& slice = slices[static_cast<std::size_t>(w)];
          for (auto& g : slice.grads)
            for (auto& v : g.a) v = 0.0;
          slice.accum = TermAccum{};
          slice.bad_index = -1;
          const long lo = start + static_cast<long>(w) * chunk;
          const long hi = std::min(lo + chunk, stop);
          if (lo >= hi) continue;
          pool.emplace_back(run_slice, w, lo, hi, std::ref(slice));
        }
        for (auto& th : pool) th.join();
      }

      for (const auto& slice : slices) {
        if (slice.bad_index >= 0) {
          std::ostringstream os;
          os << "train: non-finite loss on " << sys.name << " at epoch " << epoch << ", sample "
             << slice.bad_index << ": "
             << describe_sample(data[static_cast<std::size_t>(slice.bad_index)]);
          throw NumericDomain(os.str());
        }
      }
      for (const auto& slice : slices) {
        for (std::size_t g = 0; g < grads.size(); ++g)
          for (std::size_t i = 0; i < grads[g].a.size(); ++i)
            grads[g].a[i] += slice.grads[g].a[i];
        epoch_acc.merge(slice.accum);
      }
      adam_step(nets.refs, grads, adam);
    }
    result.history.push_back(epoch_acc.mean());
  }
  return result;
}

double pointwise_accuracy(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                          double rate, int m_test, unsigned long long seed, int workers) {
  if (m_test < 1 || workers < 1)
    throw ContractViolation("pointwise_accuracy: m_test and workers must be positive");
  const std::vector<Sample> data = sample_dataset(sys, m_test, seed);
  std::atomic<long> hits{0};
  auto run = [&](long lo, long hi) {
    long local = 0;
    for (long i = lo; i < hi; ++i) {
      const Sample& s = data[static_cast<std::size_t>(i)];
      const Mat d = contraction_matrix_dual(sys, mn, cn, rate, s.x, s.xs, s.us);
      if (sym_eig_max(d) < 0.0) ++local;
    }
    hits += local;
  };
  if (workers == 1) {
    run(0, m_test);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (m_test + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const long lo = static_cast<long>(w) * chunk;
      const long hi = std::min<long>(lo + chunk, m_test);
      if (lo < hi) pool.emplace_back(run, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return static_cast<double>(hits.load()) / static_cast<double>(m_test);
}

void save_history_csv(const std::string& path, const std::vector<LossTerms>& history) {
  std::ofstream out(path);
  if (!out) throw ParseError("save_history_csv: cannot open " + path);
  out << "epoch,total,contraction,strong,killing,conditioning\n";
  out.precision(17);
  for (std::size_t e = 0; e < history.size(); ++e) {
    const LossTerms& t = history[e];
    out << e << ',' << t.total << ',' << t.contraction << ',' << t.strong << ',' << t.killing
        << ',' << t.conditioning << '\n';
  }
}

}  // namespace ccm
