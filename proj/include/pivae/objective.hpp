#pragma once

#include <random>
#include <set>

#include "pivae/model.hpp"

namespace pivae {

enum class PpcMode { Simple, MarginalK2 };

struct RegWeights {
  double alpha = 0.0;  // R_PPC
  double beta = 0.0;   // R_DA,1
  double gamma = 0.0;  // R_DA,2
  PpcMode ppc_mode = PpcMode::Simple;
  double zstar_low = 0.0;
  double zstar_high = 1.0;
};

struct LossBreakdown {
  double neg_elbo = 0.0;
  double r_ppc = 0.0;
  double r_da1 = 0.0;
  double r_da2 = 0.0;
  double total = 0.0;
};

// Single-sample Monte-Carlo ELBO, mean over the minibatch rows of x.
Tensor elbo(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng);

// Single-sample estimate of the posterior-predictive KL bound between the
// from_set-reduced and to_set-reduced models (from_set must be a strict
// subset of to_set). All decoder means share latents sampled from the full
// posterior; the latent KL terms are taken against the priors.
Tensor hat_d(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng,
             const std::set<std::size_t>& from_set,
             const std::set<std::size_t>& to_set);

Tensor r_ppc(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng,
             PpcMode mode);

// || g_P1(x, z_A) - sg[x^r(g_P(x, z_A))] ||^2, mean over the minibatch.
Tensor r_da1(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng);

// || g_P2(sg[x^r(z*)]) - z* ||^2 with z* ~ U(zstar range) and fresh initial
// conditions drawn from the training IC distribution; one draw per row.
Tensor r_da2(const PiVaeModel& m, std::mt19937_64& rng,
             const RegWeights& weights, std::size_t batch);

// neg_elbo + alpha R_PPC + beta R_DA,1 + gamma R_DA,2; breakdown holds the
// minibatch means of each term.
Tensor total_loss(const PiVaeModel& m, const Tensor& x,
                  const RegWeights& weights, std::mt19937_64& rng,
                  LossBreakdown* breakdown = nullptr);

}  // namespace pivae
