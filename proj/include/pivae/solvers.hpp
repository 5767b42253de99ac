#pragma once

#include <functional>
#include <set>
#include <string>

#include "pivae/nn.hpp"
#include "pivae/physics.hpp"
#include "pivae/tensor.hpp"

namespace pivae {

struct UnrollConfig {
  double dt = 0.05;
  std::size_t steps = 50;  // number of emitted frames, frame 0 = IC
};

enum class Experiment { Pendulum, AdvDif };
enum class Variant { NnOnly, PhysOnly, NnSolver, NnPhys, NnPhysReg };

const char* experiment_name(Experiment e);
const char* variant_name(Variant v);
Experiment experiment_from_name(const std::string& s);
Variant variant_from_name(const std::string& s);

// Which decoder pieces exist and how they are wired. Pendulum hybrid has two
// trainable functions: f_A1 inside the ODE (baseline: zero) and f_A2 applied
// to the solved sequence per time step (baseline: identity). AdvDif hybrid
// has one f_A inside the PDE (baseline: zero).
struct DecoderSpec {
  Experiment experiment = Experiment::Pendulum;
  Variant variant = Variant::NnPhysReg;
  std::size_t dim_zp = 1;
  std::vector<std::size_t> dim_za;  // latent width per z_A block
  std::size_t grid_points = 12;     // AdvDif only
  double s_max = 2.0;               // AdvDif only
  MlpSpec fa1;                      // in-equation net (or NN-only direct map)
  MlpSpec fa2;                      // pendulum out-equation net
  std::string fa1_prefix = "dec.fa1";
  std::string fa2_prefix = "dec.fa2";

  bool has_physics() const {
    return variant == Variant::PhysOnly || variant == Variant::NnPhys ||
           variant == Variant::NnPhysReg;
  }
  // Number of trainable decoder functions subject to reduction.
  std::size_t n_trainable() const {
    if (!has_physics()) return 0;
    return experiment == Experiment::Pendulum ? 2 : 1;
  }
};

// Forward Euler over a second-order ODE; emits the angle sequence as B x tau.
// accel(theta, theta_dot) -> theta_ddot, all B x 1.
Tensor euler_unroll(
    const std::function<Tensor(const Tensor&, const Tensor&)>& accel,
    const Tensor& theta0, const Tensor& theta_dot0, const UnrollConfig& cfg);

// Explicit time stepping of a spatial field T (B x H); boundary columns are
// pinned to their (zero) initial values at every frame. Returns B x (H*tau),
// frames stored time-major.
Tensor fd_unroll(const std::function<Tensor(const Tensor&)>& rate,
                 const Tensor& T0, const UnrollConfig& cfg);

// Applies the pendulum out-equation net per time step: each column of the
// solved sequence nu pairs with z_A2 to produce one output frame, so the
// decode length is not tied to the training horizon.
Tensor apply_out_equation(const DecoderSpec& spec, const ParamStore& params,
                          const Tensor& nu, const Tensor& z_a2);

// The functional F: wires f_P, the f_A's and the baselines into the decoder
// mean. Indices in reduce_set (1-based) have their f_A replaced by its
// baseline. ic is theta_1 (B x 1) for the pendulum, the first frame (B x H)
// for AdvDif; z_P may be undefined for variants without physics.
Tensor compose_decoder(const DecoderSpec& spec, const ParamStore& params,
                       const Tensor& z_p, const std::vector<Tensor>& z_a,
                       const Tensor& ic, const UnrollConfig& cfg,
                       const std::set<std::size_t>& reduce_set);

}  // namespace pivae
