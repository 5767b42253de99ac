#pragma once

#include <cstddef>
#include <random>
#include <vector>

// Exhaustive-enumeration checks on small discrete surrogates. Each case
// builds a random instance and returns both sides of an inequality the
// continuous objective relies on; callers assert rhs - lhs >= -tol.
namespace pivae::oracle {

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
};

double kl_discrete(const std::vector<double>& p, const std::vector<double>& q);

// KL of the x-marginals of two random joints on an nx-by-ny grid (lhs)
// against the KL of the joints themselves (rhs).
BoundCheck marginal_kl_bound_case(std::mt19937_64& rng, std::size_t nx,
                                  std::size_t ny);

// Mutual information of a random joint q(x, y) (lhs) against
// E_{q(y)} KL[q(x|y) || p(x)] for an arbitrary random p(x) (rhs).
BoundCheck mutual_info_bound_case(std::mt19937_64& rng, std::size_t nx,
                                  std::size_t ny);

// Full surrogate of the posterior-predictive discrepancy: a discrete model
// with 3-state z_P and z_A latents and a 4-state observable, random decoder
// and encoder tables, and a reduced counterpart whose encoder swaps the z_A
// posterior for its prior. lhs is the exact KL between the two posterior
// predictive distributions; rhs is the three-term surrogate (decoder
// discrepancy + latent KLs) evaluated by enumeration.
BoundCheck predictive_kl_bound_case(std::mt19937_64& rng);

}  // namespace pivae::oracle
