#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pivae/data.hpp"
#include "pivae/model.hpp"
#include "pivae/objective.hpp"

namespace pivae {

struct TrainConfig {
  std::size_t epochs = 1500;
  std::size_t batch_size = 200;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-3;
  RegWeights weights;
  std::uint64_t seed = 0;
};

// Published hyperparameters for each experiment: regularizer weights, the
// z* sampling range, and the desk-scale epoch budget.
RegWeights default_weights(Experiment e);
std::size_t default_epochs(Experiment e);

// Per-parameter moment buffers, keyed like the ParamStore.
struct AdamState {
  std::map<std::string, std::vector<double>> first;
  std::map<std::string, std::vector<double>> second;
  std::size_t step = 0;
};

// Bias-corrected Adam update over every parameter group; eps is added to the
// square-rooted second moment in the denominator.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;  // means over the epoch's processed minibatches
  double valid_mae = 0.0;
  std::size_t skipped = 0;  // minibatches dropped by the divergence guard
};

struct TrainResult {
  std::map<std::string, std::vector<double>> best_values;
  double best_valid_mae = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Seeded epoch loop with validation-based best-checkpoint retention. The
// model is left at the best-validation parameters on return. A minibatch
// whose unroll blows up or whose gradients are non-finite is skipped; more
// than 10% skipped within one epoch aborts the run.
TrainResult train(PiVaeModel& m, const DatasetSplits& data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Columns: epoch,neg_elbo,r_ppc,r_da1,r_da2,total,valid_mae
void save_history_csv(const std::vector<EpochRecord>& history,
                      const std::string& path);

}  // namespace pivae
