#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pivae {

struct PendulumTruth {
  double omega;   // rad/s, what z_P should recover
  double xi;      // damping
  double amp;     // forcing amplitude A
  double phi;     // forcing frequency
  double theta0;  // initial angle, theta_dot(0) = 0
};

struct AdvDifTruth {
  double a;  // diffusion coefficient, what z_P should recover
  double b;  // advection coefficient
  double c;  // initial amplitude of the sine profile
};

struct DatasetMeta {
  std::string experiment;  // "pendulum" | "advdif"
  double dt = 0.05;
  std::size_t tau = 50;
  std::size_t grid_points = 0;  // advdif only
  double s_max = 2.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::string split_name = "all";
};

struct SequenceDataset {
  DatasetMeta meta;
  std::vector<std::vector<double>> sequences;  // flattened, time-major
  std::vector<PendulumTruth> pendulum_truths;
  std::vector<AdvDifTruth> advdif_truths;

  std::size_t size() const { return sequences.size(); }
  bool is_pendulum() const { return meta.experiment == "pendulum"; }
  double true_param(std::size_t i) const {
    return is_pendulum() ? pendulum_truths[i].omega : advdif_truths[i].a;
  }
};

// Deterministic per-sequence RNG stream seed.
std::uint64_t mixed_seed(std::uint64_t seed, std::uint64_t index);

// Noiseless reference trajectories (fine-substep RK4 sampled on the
// observation grid). Tests and figure CSVs use these, never the model.
std::vector<double> pendulum_reference(const PendulumTruth& t, double dt,
                                       std::size_t tau,
                                       std::size_t substeps = 50);
std::vector<double> advdif_reference(const AdvDifTruth& t, double dt,
                                     std::size_t tau, std::size_t grid_points,
                                     double s_max, std::size_t substeps = 50);

SequenceDataset gen_pendulum(std::size_t n, std::uint64_t seed,
                             std::size_t horizon_steps = 50, double dt = 0.05);
SequenceDataset gen_advdif(std::size_t n, std::uint64_t seed,
                           std::size_t horizon_steps = 50, double dt = 0.02);

struct SplitSizes {
  std::size_t train, valid, test;
};

struct DatasetSplits {
  SequenceDataset train, valid, test;
};

// Valid and test are drawn first by seeded permutation, then the training
// subset from the remainder; indices are disjoint.
DatasetSplits split(const SequenceDataset& ds, const SplitSizes& sizes,
                    std::uint64_t seed);

// stem.csv (header + one row per sequence: truth columns then the flattened
// sequence, 17 significant digits) and stem.meta (key = value lines).
void save_dataset(const SequenceDataset& ds, const std::string& stem);
SequenceDataset load_dataset(const std::string& stem);

}  // namespace pivae
