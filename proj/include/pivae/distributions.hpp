#pragma once

#include <random>

#include "pivae/tensor.hpp"

namespace pivae {

// Diagonal Gaussian over the columns; mean may be batched (B x d) with var
// either matching or a global 1 x d row. Trainable variances live in the
// ParamStore as log-variance and are exponentiated before constructing this.
struct DiagGaussian {
  Tensor mean;
  Tensor var;
};

// Per-row KL(q || p), shape B x 1 (1 x 1 for a single sample).
Tensor kl_diag(const DiagGaussian& q, const DiagGaussian& p);

// z = mean + sqrt(var) * eps, eps ~ N(0, I); differentiable in mean and var.
Tensor reparam_sample(const DiagGaussian& q, std::mt19937_64& rng);

// Per-row log N(x | mean, diag(var)), shape B x 1.
Tensor gauss_logpdf(const Tensor& x, const DiagGaussian& p);

// KL between two Gaussians sharing diagonal covariance obs_var:
// 1/2 sum_i (mu1_i - mu2_i)^2 / obs_var_i, per row.
Tensor kl_gaussian_decoders(const Tensor& mean_full, const Tensor& mean_reduced,
                            const Tensor& obs_var);

}  // namespace pivae
