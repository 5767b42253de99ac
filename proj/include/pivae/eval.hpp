#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pivae/data.hpp"
#include "pivae/model.hpp"

namespace pivae {

struct MetricsReport {
  std::string variant;
  double reconstruction_mae = 0.0;
  double reconstruction_sd = 0.0;
  double inferred_param_mae = 0.0;
  double inferred_param_sd = 0.0;
  bool has_inference = false;
  std::size_t n_trials = 1;
};

// Mean over the set of mean-|x - decoder mean| with latents at a single
// seeded posterior sample.
double eval_reconstruction(const PiVaeModel& m, const SequenceDataset& ds,
                           std::uint64_t seed);

// Mean over the set of |q_P mean - true physics parameter| (pendulum omega,
// advection-diffusion a).
double eval_inference(const PiVaeModel& m, const SequenceDataset& ds,
                      std::uint64_t seed);

// Encode x once (seeded sample) and decode with an extended horizon. Errors
// for the direct-map variant, which has no dynamics to unroll.
Tensor extrapolate(const PiVaeModel& m, const Tensor& x,
                   std::size_t total_steps, std::uint64_t seed);

// Encode once, pin z_A at the posterior means, decode once per supplied z_P
// value. zp_values must be positive for these systems.
std::vector<Tensor> counterfactual(const PiVaeModel& m, const Tensor& x,
                                   const std::vector<double>& zp_values,
                                   std::uint64_t seed);

}  // namespace pivae
