#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pivae/distributions.hpp"
#include "pivae/nn.hpp"
#include "pivae/solvers.hpp"

namespace pivae {

struct ModelConfig {
  DecoderSpec decoder;
  UnrollConfig unroll;
  std::size_t x_dim = 50;  // tau (pendulum) or H*tau (advdif)
  std::vector<MlpSpec> g_a;  // recognition net per z_A block
  MlpSpec g_p1;  // cleansing stage (the U net when gp1_residual)
  MlpSpec g_p2;  // cleansed signal -> positive z_P posterior mean
  bool gp1_residual = false;  // pendulum: g_P1(x, z_A) = x + U(x, z_A)
  double zp_prior_mean = 0.0;
  double zp_prior_std = 1.0;
  double sigma_x_init = 1e-2;  // observation variance, trainable (theta)
  double sigma_a_init = 1e-2;  // posterior variance of z_A blocks (psi)
  double sigma_p_init = 1e-4;  // posterior variance of z_P (psi)
  std::uint64_t seed = 0;
};

struct EncoderOutput {
  std::vector<DiagGaussian> q_a;
  std::vector<Tensor> z_a;  // reparameterized samples, one per block
  DiagGaussian q_p;         // defined only for variants with z_P
  Tensor z_p;
  Tensor cleansed;          // g_P1 output, consumed by R_DA,1
};

// Reuses the solved inner sequence across reduce sets that share it, so
// partially reduced decoder means are bit-identical to independent decodes.
struct DecodeMemo {
  std::optional<Tensor> inner_full;  // solver output with f_A1 active
  std::optional<Tensor> inner_phys;  // solver output with f_A1 reduced
};

class PiVaeModel {
 public:
  ModelConfig cfg;
  ParamStore params;

  bool has_zp() const { return cfg.decoder.has_physics(); }
  std::size_t n_za_blocks() const { return cfg.decoder.dim_za.size(); }

  // z_A blocks sampled first, then the cleansed signal, then z_P from its
  // posterior conditioned on that sample.
  EncoderOutput encode(const Tensor& x, std::mt19937_64& rng) const;

  Tensor ic_from(const Tensor& x) const;  // first frame of each sequence
  Tensor obs_var() const;                 // exp(logvar_x), 1 x 1
  DiagGaussian zp_prior() const;
  DiagGaussian za_prior(std::size_t block) const;

  Tensor decode_mean(const Tensor& z_p, const std::vector<Tensor>& z_a,
                     const Tensor& ic, const std::set<std::size_t>& reduce_set,
                     std::size_t steps_override = 0,
                     DecodeMemo* memo = nullptr) const;
  DiagGaussian decode(const Tensor& z_p, const std::vector<Tensor>& z_a,
                      const Tensor& ic, const std::set<std::size_t>& reduce_set,
                      std::size_t steps_override = 0,
                      DecodeMemo* memo = nullptr) const;

  // x^r(z_P*): decode with every trainable part reduced to its baseline.
  Tensor physics_only_signal(const Tensor& z_p_star, const Tensor& ic,
                             std::size_t steps_override = 0) const;

  std::set<std::size_t> all_reduced() const;

  // Reduced-model latent draw: z_A from the prior, z_P from its posterior
  // conditioned on a fresh posterior z_A sample.
  struct ReducedSample {
    Tensor z_p;
    std::vector<Tensor> z_a;
  };
  ReducedSample reduced_posterior_sample(const Tensor& x,
                                         std::mt19937_64& rng) const;
};

PiVaeModel build_model(Experiment experiment, Variant variant,
                       std::uint64_t seed);

// Flat binary container: metadata header (experiment, variant, seed, unroll)
// followed by name -> shape + little-endian f64 buffer records. Round-trips
// bit-exactly.
void save_checkpoint(const PiVaeModel& m, const std::string& path);
PiVaeModel load_checkpoint(const std::string& path);

// Pack sequences [lo, hi) of a batch into a B x D tensor.
Tensor pack_batch(const std::vector<std::vector<double>>& sequences,
                  const std::vector<std::size_t>& indices);

}  // namespace pivae
