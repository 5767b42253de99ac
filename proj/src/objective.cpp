#include "pivae/objective.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pivae {

namespace {

// Per-row KL of the full posterior against the priors, every z_A block plus
// z_P when present. Shared by the ELBO and the predictive-discrepancy bound.
Tensor latent_kl(const PiVaeModel& m, const EncoderOutput& enc) {
  Tensor total;
  bool first = true;
  for (std::size_t k = 0; k < m.n_za_blocks(); ++k) {
    Tensor t = kl_diag(enc.q_a[k], m.za_prior(k));
    total = first ? t : add(total, t);
    first = false;
  }
  if (m.has_zp()) {
    Tensor t = kl_diag(enc.q_p, m.zp_prior());
    total = first ? t : add(total, t);
    first = false;
  }
  if (first) total = Tensor::scalar(0.0);
  return total;
}

void check_sets(const PiVaeModel& m, const std::set<std::size_t>& from_set,
                const std::set<std::size_t>& to_set) {
  const std::size_t k = m.cfg.decoder.n_trainable();
  if (k == 0)
    throw DomainError("hat_d: model has no reducible trainable parts");
  for (auto i : to_set)
    if (i < 1 || i > k)
      throw DomainError("hat_d: index " + std::to_string(i) +
                        " outside 1.." + std::to_string(k));
  for (auto i : from_set)
    if (to_set.count(i) == 0)
      throw DomainError("hat_d: from_set must be a subset of to_set");
  if (from_set.size() >= to_set.size())
    throw DomainError("hat_d: from_set must be a strict subset of to_set");
}

// Per-row single-sample bound estimate; latents shared via enc, solver
// passes shared via memo.
Tensor hat_d_rows(const PiVaeModel& m, const EncoderOutput& enc,
                  const Tensor& ic, const std::set<std::size_t>& from_set,
                  const std::set<std::size_t>& to_set, DecodeMemo* memo) {
  Tensor mean_from = m.decode_mean(enc.z_p, enc.z_a, ic, from_set, 0, memo);
  Tensor mean_to = m.decode_mean(enc.z_p, enc.z_a, ic, to_set, 0, memo);
  Tensor dec_kl = kl_gaussian_decoders(mean_from, mean_to, m.obs_var());
  return add(dec_kl, latent_kl(m, enc));
}

Tensor row_sq_error(const Tensor& a, const Tensor& b) {
  return sum_rows(square(sub(a, b)));
}

}  // namespace

Tensor elbo(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng) {
  EncoderOutput enc = m.encode(x, rng);
  Tensor mean_x = m.decode_mean(enc.z_p, enc.z_a, m.ic_from(x), {});
  Tensor recon = gauss_logpdf(x, DiagGaussian{mean_x, m.obs_var()});
  return mean(sub(recon, latent_kl(m, enc)));
}

Tensor hat_d(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng,
             const std::set<std::size_t>& from_set,
             const std::set<std::size_t>& to_set) {
  check_sets(m, from_set, to_set);
  EncoderOutput enc = m.encode(x, rng);
  DecodeMemo memo;
  return mean(hat_d_rows(m, enc, m.ic_from(x), from_set, to_set, &memo));
}

Tensor r_ppc(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng,
             PpcMode mode) {
  const std::size_t k = m.cfg.decoder.n_trainable();
  if (k == 0)
    throw DomainError("r_ppc: model has no reducible trainable parts");
  EncoderOutput enc = m.encode(x, rng);
  Tensor ic = m.ic_from(x);
  DecodeMemo memo;
  if (mode == PpcMode::Simple)
    return mean(hat_d_rows(m, enc, ic, {}, m.all_reduced(), &memo));
  if (k != 2)
    throw DomainError("r_ppc: MarginalK2 needs exactly two trainable parts");
  Tensor total = hat_d_rows(m, enc, ic, {}, {1}, &memo);
  total = add(total, hat_d_rows(m, enc, ic, {}, {2}, &memo));
  total = add(total, hat_d_rows(m, enc, ic, {1}, {1, 2}, &memo));
  total = add(total, hat_d_rows(m, enc, ic, {2}, {1, 2}, &memo));
  return scalar_mul(mean(total), 0.25);
}

Tensor r_da1(const PiVaeModel& m, const Tensor& x, std::mt19937_64& rng) {
  if (!m.has_zp()) throw DomainError("r_da1: model has no physics part");
  EncoderOutput enc = m.encode(x, rng);
  Tensor target;
  {
    TapePause pause;
    target = m.physics_only_signal(enc.q_p.mean, m.ic_from(x));
  }
  target = stop_gradient(target);
  return mean(row_sq_error(enc.cleansed, target));
}

Tensor r_da2(const PiVaeModel& m, std::mt19937_64& rng,
             const RegWeights& weights, std::size_t batch) {
  if (!m.has_zp()) throw DomainError("r_da2: model has no physics part");
  if (!(weights.zstar_low < weights.zstar_high))
    throw DomainError("r_da2: zstar range must have low < high");
  if (batch == 0) throw DomainError("r_da2: batch must be positive");

  std::uniform_real_distribution<double> uz(weights.zstar_low,
                                            weights.zstar_high);
  std::vector<double> zstar_vals(batch);
  Tensor ic;
  if (m.cfg.decoder.experiment == Experiment::Pendulum) {
    std::uniform_real_distribution<double> uth(-1.57, 1.57);
    std::vector<double> theta0(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      zstar_vals[b] = uz(rng);
      theta0[b] = uth(rng);
    }
    ic = Tensor::from({batch, 1}, theta0);
  } else {
    const std::size_t h = m.cfg.decoder.grid_points;
    const double s_max = m.cfg.decoder.s_max;
    const double ds = s_max / static_cast<double>(h - 1);
    std::uniform_real_distribution<double> uc(0.5, 1.5);
    std::vector<double> t0(batch * h);
    for (std::size_t b = 0; b < batch; ++b) {
      zstar_vals[b] = uz(rng);
      const double c = uc(rng);
      for (std::size_t i = 1; i + 1 < h; ++i)
        t0[b * h + i] = c * std::sin(std::numbers::pi * ds *
                                     static_cast<double>(i) / s_max);
    }
    ic = Tensor::from({batch, h}, t0);
  }
  Tensor zstar = Tensor::from({batch, 1}, zstar_vals);

  Tensor target;
  {
    TapePause pause;
    target = m.physics_only_signal(zstar, ic);
  }
  target = stop_gradient(target);
  Tensor pred = mlp_forward(m.cfg.g_p2, m.params, "enc.gp2", target);
  return mean(row_sq_error(pred, zstar));
}

Tensor total_loss(const PiVaeModel& m, const Tensor& x,
                  const RegWeights& weights, std::mt19937_64& rng,
                  LossBreakdown* breakdown) {
  if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0)
    throw DomainError("total_loss: weights must be non-negative");

  LossBreakdown out;
  Tensor total = scalar_mul(elbo(m, x, rng), -1.0);
  out.neg_elbo = total.item();
  if (weights.alpha > 0) {
    Tensor t = r_ppc(m, x, rng, weights.ppc_mode);
    out.r_ppc = t.item();
    total = add(total, scalar_mul(t, weights.alpha));
  }
  if (weights.beta > 0) {
    Tensor t = r_da1(m, x, rng);
    out.r_da1 = t.item();
    total = add(total, scalar_mul(t, weights.beta));
  }
  if (weights.gamma > 0) {
    Tensor t = r_da2(m, rng, weights, x.rows());
    out.r_da2 = t.item();
    total = add(total, scalar_mul(t, weights.gamma));
  }
  out.total = total.item();
  if (breakdown) *breakdown = out;
  return total;
}

}  // namespace pivae
