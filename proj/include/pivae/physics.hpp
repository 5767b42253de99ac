#pragma once

#include "pivae/nn.hpp"
#include "pivae/tensor.hpp"

namespace pivae {

// Pendulum physics contribution to the angular acceleration: -z_P^2 sin(theta).
// theta and z_P are B x 1 columns.
Tensor pendulum_accel(const Tensor& theta, const Tensor& z_p);

// Diffusion right-hand side on the H-point even grid over [0, s_max]:
// interior z_P * (T[i-1] - 2 T[i] + T[i+1]) / ds^2, boundary rows pinned to
// exactly zero (Dirichlet). T is B x H, z_P is B x 1.
Tensor diffusion_rate(const Tensor& T, const Tensor& z_p, double s_max);

struct BaselineFn {
  enum class Kind { Zero, Identity, Affine } kind = Kind::Zero;
  std::string param_prefix;  // Affine only: <prefix>.w / <prefix>.b in param_h
};

// Registers the Affine baseline's W (d_out x d_in, identity-initialized) and
// bias (zeros) in the param_h group.
void init_affine_baseline(ParamStore& store, const std::string& prefix,
                          std::size_t d_out, std::size_t d_in);

Tensor apply_baseline(const BaselineFn& b, const Tensor& y,
                      const ParamStore& params);

}  // namespace pivae
