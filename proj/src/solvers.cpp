#include "pivae/solvers.hpp"

#include <cmath>

namespace pivae {

const char* experiment_name(Experiment e) {
  return e == Experiment::Pendulum ? "pendulum" : "advdif";
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::NnOnly: return "nn-only";
    case Variant::PhysOnly: return "phys-only";
    case Variant::NnSolver: return "nn-solver";
    case Variant::NnPhys: return "nn-phys";
    case Variant::NnPhysReg: return "nn-phys-reg";
  }
  return "?";
}

Experiment experiment_from_name(const std::string& s) {
  if (s == "pendulum") return Experiment::Pendulum;
  if (s == "advdif" || s == "advection-diffusion") return Experiment::AdvDif;
  throw TensorError("unknown experiment: " + s);
}

Variant variant_from_name(const std::string& s) {
  if (s == "nn-only") return Variant::NnOnly;
  if (s == "phys-only") return Variant::PhysOnly;
  if (s == "nn-solver") return Variant::NnSolver;
  if (s == "nn-phys") return Variant::NnPhys;
  if (s == "nn-phys-reg") return Variant::NnPhysReg;
  throw TensorError("unknown variant: " + s);
}

Tensor euler_unroll(
    const std::function<Tensor(const Tensor&, const Tensor&)>& accel,
    const Tensor& theta0, const Tensor& theta_dot0, const UnrollConfig& cfg) {
  if (cfg.dt <= 0.0 || cfg.steps < 1)
    throw TensorError("euler_unroll: invalid UnrollConfig");
  std::vector<Tensor> frames;
  frames.reserve(cfg.steps);
  Tensor th = theta0, thd = theta_dot0;
  frames.push_back(th);
  for (std::size_t t = 1; t < cfg.steps; ++t) {
    Tensor a = accel(th, thd);
    Tensor th_next = add(th, scalar_mul(thd, cfg.dt));
    Tensor thd_next = add(thd, scalar_mul(a, cfg.dt));
    if (!all_finite(th_next) || !all_finite(thd_next))
      throw NonFiniteError(
          "euler_unroll: non-finite state at step " + std::to_string(t), t);
    th = th_next;
    thd = thd_next;
    frames.push_back(th);
  }
  return concat_cols(frames);
}

Tensor fd_unroll(const std::function<Tensor(const Tensor&)>& rate,
                 const Tensor& T0, const UnrollConfig& cfg) {
  if (cfg.dt <= 0.0 || cfg.steps < 1)
    throw TensorError("fd_unroll: invalid UnrollConfig");
  std::size_t h = T0.cols();
  std::vector<double> mask_v(h, 1.0);
  mask_v.front() = 0.0;
  mask_v.back() = 0.0;
  Tensor mask = Tensor::from({1, h}, std::move(mask_v));

  std::vector<Tensor> frames;
  frames.reserve(cfg.steps);
  Tensor T = T0;
  frames.push_back(T);
  for (std::size_t t = 1; t < cfg.steps; ++t) {
    Tensor dT = mul(rate(T), mask);
    Tensor T_next = add(T, scalar_mul(dT, cfg.dt));
    if (!all_finite(T_next))
      throw NonFiniteError(
          "fd_unroll: non-finite field at step " + std::to_string(t), t);
    T = T_next;
    frames.push_back(T);
  }
  return concat_cols(frames);
}

// f_A2 corrects the whole solved sequence at once; its net is sized to the
// native horizon. Longer unrolls apply the correction to the native window
// and let the solver output pass through unchanged beyond it.
Tensor apply_out_equation(const DecoderSpec& spec, const ParamStore& params,
                          const Tensor& nu, const Tensor& z_a2) {
  const std::size_t tau = nu.cols();
  const std::size_t native = spec.fa2.layer_sizes.front() - z_a2.cols();
  if (tau < native)
    throw TensorError("apply_out_equation: sequence shorter than the horizon "
                      "the correction net was built for");
  Tensor head = tau == native ? nu : slice_cols(nu, 0, native);
  Tensor out =
      mlp_forward(spec.fa2, params, spec.fa2_prefix, concat_cols({head, z_a2}));
  if (tau == native) return out;
  return concat_cols({out, slice_cols(nu, native, tau)});
}

namespace {

Tensor pendulum_decode(const DecoderSpec& spec, const ParamStore& params,
                       const Tensor& z_p, const std::vector<Tensor>& z_a,
                       const Tensor& ic, const UnrollConfig& cfg,
                       const std::set<std::size_t>& reduce_set) {
  const bool physics = spec.has_physics();
  const bool reduce1 = reduce_set.count(1) != 0;
  const bool reduce2 = reduce_set.count(2) != 0;
  const bool use_fa1 = physics ? (spec.variant != Variant::PhysOnly && !reduce1)
                               : true;

  auto accel = [&](const Tensor& th, const Tensor& thd) -> Tensor {
    (void)thd;
    Tensor a;
    if (physics) a = pendulum_accel(th, z_p);
    if (use_fa1 && spec.variant != Variant::PhysOnly) {
      Tensor fa1_out = mlp_forward(spec.fa1, params, spec.fa1_prefix,
                                   concat_cols({th, z_a.at(0)}));
      a = physics ? sub(a, fa1_out) : neg(fa1_out);
    }
    return a;
  };

  Tensor theta_dot0 = Tensor::zeros({ic.rows(), 1});
  Tensor nu = euler_unroll(accel, ic, theta_dot0, cfg);

  const bool use_fa2 =
      spec.variant != Variant::PhysOnly && !(physics && reduce2);
  if (!use_fa2) return nu;  // h_A2 = identity
  return apply_out_equation(spec, params, nu, z_a.at(1));
}

Tensor advdif_decode(const DecoderSpec& spec, const ParamStore& params,
                     const Tensor& z_p, const std::vector<Tensor>& z_a,
                     const Tensor& ic, const UnrollConfig& cfg,
                     const std::set<std::size_t>& reduce_set) {
  const bool physics = spec.has_physics();
  const bool use_fa = spec.variant != Variant::PhysOnly &&
                      !(physics && reduce_set.count(1));
  auto rate = [&](const Tensor& T) -> Tensor {
    Tensor r;
    if (physics) r = diffusion_rate(T, z_p, spec.s_max);
    if (use_fa) {
      Tensor fa_out = mlp_forward(spec.fa1, params, spec.fa1_prefix,
                                  concat_cols({T, z_a.at(0)}));
      r = physics ? sub(r, fa_out) : neg(fa_out);
    }
    return r;
  };
  return fd_unroll(rate, ic, cfg);
}

}  // namespace

Tensor compose_decoder(const DecoderSpec& spec, const ParamStore& params,
                       const Tensor& z_p, const std::vector<Tensor>& z_a,
                       const Tensor& ic, const UnrollConfig& cfg,
                       const std::set<std::size_t>& reduce_set) {
  for (auto i : reduce_set)
    if (i < 1 || i > spec.n_trainable())
      throw TensorError("compose_decoder: reduce index " + std::to_string(i) +
                        " out of range for " +
                        std::string(variant_name(spec.variant)));

  if (spec.variant == Variant::NnOnly) {
    // Direct map concat(z_A) -> x; no solver involved.
    std::vector<Tensor> zs = z_a;
    return mlp_forward(spec.fa1, params, spec.fa1_prefix, concat_cols(zs));
  }
  if (spec.experiment == Experiment::Pendulum)
    return pendulum_decode(spec, params, z_p, z_a, ic, cfg, reduce_set);
  return advdif_decode(spec, params, z_p, z_a, ic, cfg, reduce_set);
}

}  // namespace pivae
