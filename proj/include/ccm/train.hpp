#pragma once

#include <string>
#include <vector>

#include "ccm/certloss.hpp"
#include "ccm/dynamics.hpp"

namespace ccm {

struct TrainConfig {
  int sample_count = 130000;
  int epochs = 20;
  int batch = 256;
  double lr = 1e-3;
  unsigned long long seed = 0;
  int workers = 1;
  int hidden = 128;
  int bottleneck = 32;
  bool masked = false;
  ControllerNet::Arch arch = ControllerNet::Arch::kBottleneck;
  LossConfig loss;  // loss.rate defaults from the system unless overridden
};

// x, x* uniform over the state box, u* uniform over the control box, drawn
// in that order per sample.
std::vector<Sample> sample_dataset(const SystemModel& sys, int count, unsigned long long seed);

// Mean per-sample risk of each epoch, accumulated online while training.
struct TrainResult {
  std::vector<LossTerms> history;
};

// Minibatch Adam on the empirical risk. nets must be wired for sys already.
// Deterministic per seed for a fixed worker count; bitwise reproducibility
// across different worker counts is not guaranteed (reduction order).
TrainResult train(const SystemModel& sys, NetBundle& nets, const TrainConfig& cfg);

// Fraction of fresh uniform samples whose dual contraction matrix is
// negative definite (largest eigenvalue strictly below zero).
double pointwise_accuracy(const SystemModel& sys, const MetricNet& mn, const ControllerNet& cn,
                          double rate, int m_test, unsigned long long seed, int workers = 1);

void save_history_csv(const std::string& path, const std::vector<LossTerms>& history);

}  // namespace ccm
