#pragma once

#include <cstdint>
#include <vector>

#include "pxp/ar_model.hpp"

namespace pxp {

// Plain SGD with momentum; determinism per seed is part of the contract.
struct TrainConfig {
  ArConfig arch;
  int epochs = 15;
  int batch = 25;
  double lr = 0.02;
  double momentum = 0.9;
  double holdout_fraction = 0.1;
};

struct TrainResult {
  ArPriorModel model;
  std::vector<double> loss_trace;  // per-step training NLL in bits/dim
  double holdout_bpd_initial = 0.0;
  double holdout_bpd_final = 0.0;
};

// Mean bits/dim of the model over a set of single-channel patches.
double mean_bits_per_dim(const ArPriorModel& model, const std::vector<Image>& patches);

TrainResult train_ar_prior(const std::vector<Image>& dataset, const TrainConfig& config,
                           std::uint64_t rng_seed);

}  // namespace pxp
