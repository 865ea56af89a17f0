#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spikerbm/dataset.hpp"
#include "spikerbm/rbm.hpp"

namespace spikerbm {

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 30;
  int batch_size = 100;
  int persistent_chains = 20;
  std::uint64_t seed = 1;
  double init_weight_sd = 0.01;

  void validate() const;
};

// Called after each epoch with the current model.
using EpochCallback = std::function<void(int epoch, const Rbm& model)>;

// Persistent contrastive divergence. The mask fixes the hidden count (its
// columns) and is reapplied after every update, so masked weights stay zero.
// Visible biases start at the log-odds of the data marginals.
Rbm train_pcd(const Dataset& data, const Mask& mask, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct AisConfig {
  int n_intermediate = 1000;  // number of annealing steps K; schedule has K + 1 points
  int n_runs = 100;
  std::vector<double> schedule;  // optional explicit beta_0 = 0 < ... < beta_K = 1
  std::uint64_t seed = 1;

  std::vector<double> betas() const;
};

struct AisResult {
  double log_z = 0.0;
  double log_z_stderr = 0.0;
  double log_z_base = 0.0;
  double mean_log_prob = 0.0;  // per image, only filled by ais_log_prob
  double stderr = 0.0;         // of mean_log_prob; the data term is exact so this is the log Z stderr
};

// Default schedule: 10% of steps on [0, 0.5], 40% on [0.5, 0.9], 50% on [0.9, 1].
std::vector<double> ais_schedule(int n_intermediate);

// Base-rate model: zero weights and hidden biases, the given visible biases.
AisResult ais_log_partition(const Rbm& m, const Eigen::VectorXd& base_visible_bias, const AisConfig& cfg);

// Visible biases of the base-rate model matched to data marginals (smoothed).
Eigen::VectorXd base_rate_bias(const Dataset& data, double pseudo_count = 1.0);

// Mean log-probability of the images under m, using an AIS estimate of log Z
// with a base-rate model fitted to `data`.
AisResult ais_log_prob(const Rbm& m, const Dataset& data, const AisConfig& cfg);

}  // namespace spikerbm
