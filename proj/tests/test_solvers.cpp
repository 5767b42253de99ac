#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pivae/solvers.hpp"

using namespace pivae;
using testutil::fd_grad;
using testutil::rel_err;

TEST_CASE("euler_unroll frames by hand") {
  // zero acceleration: straight line theta0 + t * dt * theta_dot0
  auto zero_acc = [](const Tensor& th, const Tensor&) {
    return Tensor::zeros({th.rows(), 1});
  };
  UnrollConfig cfg{0.1, 3};
  Tensor line = euler_unroll(zero_acc, Tensor::from({1, 1}, {0.1}),
                             Tensor::from({1, 1}, {0.1}), cfg);
  CHECK(line.data()[0] == doctest::Approx(0.1));
  CHECK(line.data()[1] == doctest::Approx(0.11));
  CHECK(line.data()[2] == doctest::Approx(0.12));

  // pendulum with z_p = 1, theta0 = 0.1, at rest:
  // frame1 keeps theta (velocity starts at 0), frame2 feels -sin(0.1)
  Tensor zp = Tensor::from({1, 1}, {1.0});
  auto acc = [&](const Tensor& th, const Tensor&) {
    return pendulum_accel(th, zp);
  };
  Tensor seq = euler_unroll(acc, Tensor::from({1, 1}, {0.1}),
                            Tensor::zeros({1, 1}), cfg);
  CHECK(seq.data()[0] == 0.1);
  CHECK(seq.data()[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(seq.data()[2] ==
        doctest::Approx(0.1 + 0.1 * (0.1 * -std::sin(0.1))).epsilon(1e-12));

  CHECK_THROWS(euler_unroll(acc, Tensor::zeros({1, 1}), Tensor::zeros({1, 1}),
                            UnrollConfig{-1.0, 5}));
  CHECK_THROWS(euler_unroll(acc, Tensor::zeros({1, 1}), Tensor::zeros({1, 1}),
                            UnrollConfig{0.1, 0}));
}

TEST_CASE("euler_unroll tracks the harmonic oscillator at small dt") {
  // Linearized pendulum theta'' = -omega^2 theta has exact solution
  // theta0 cos(omega t).
  const double omega = 2.0, theta0 = 0.05;
  auto acc = [&](const Tensor& th, const Tensor&) {
    return scalar_mul(th, -omega * omega);
  };
  UnrollConfig cfg{1e-4, 10001};
  Tensor seq = euler_unroll(acc, Tensor::from({1, 1}, {theta0}),
                            Tensor::zeros({1, 1}), cfg);
  double worst = 0.0;
  for (std::size_t t = 0; t < cfg.steps; t += 500) {
    const double exact = theta0 * std::cos(omega * double(t) * cfg.dt);
    worst = std::max(worst, std::abs(seq.data()[t] - exact));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("euler_unroll is first order: halving dt halves the error") {
  const double omega = 1.5, theta0 = 0.2, t_end = 1.0;
  auto acc = [&](const Tensor& th, const Tensor&) {
    return scalar_mul(th, -omega * omega);
  };
  auto err_at = [&](double dt) {
    const std::size_t steps = std::size_t(std::lround(t_end / dt)) + 1;
    Tensor seq = euler_unroll(acc, Tensor::from({1, 1}, {theta0}),
                              Tensor::zeros({1, 1}), UnrollConfig{dt, steps});
    return std::abs(seq.data()[steps - 1] - theta0 * std::cos(omega * t_end));
  };
  const double ratio = err_at(2e-3) / err_at(1e-3);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("fd_unroll: constant field, pinned boundaries, eigenmode decay") {
  const std::size_t h = 12;
  const double s_max = 2.0, ds = s_max / double(h - 1);
  UnrollConfig cfg{0.02, 40};

  // zero rate: every frame equals the IC
  std::mt19937_64 rng(2);
  std::vector<double> ic_v = testutil::random_vec(rng, h);
  ic_v.front() = 0.0;
  ic_v.back() = 0.0;
  Tensor ic = Tensor::from({1, h}, ic_v);
  auto zero_rate = [](const Tensor& T) {
    return Tensor::zeros({T.rows(), T.cols()});
  };
  Tensor still = fd_unroll(zero_rate, ic, cfg);
  for (std::size_t t = 0; t < cfg.steps; ++t)
    for (std::size_t i = 0; i < h; ++i)
      CHECK(still.data()[t * h + i] == ic_v[i]);

  // sine profile is an eigenvector of the discrete Dirichlet Laplacian:
  // each explicit step multiplies it by 1 - dt a (2/ds^2)(1 - cos(pi ds/s_max))
  const double a = 0.1;
  std::vector<double> sine(h);
  for (std::size_t i = 0; i < h; ++i)
    sine[i] = std::sin(std::numbers::pi * ds * double(i) / s_max);
  sine.front() = 0.0;
  sine.back() = 0.0;
  Tensor zp = Tensor::from({1, 1}, {a});
  auto rate = [&](const Tensor& T) { return diffusion_rate(T, zp, s_max); };
  Tensor decay = fd_unroll(rate, Tensor::from({1, h}, sine), cfg);
  const double factor =
      1.0 - cfg.dt * a * (2.0 / (ds * ds)) *
                (1.0 - std::cos(std::numbers::pi * ds / s_max));
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const double scale = std::pow(factor, double(t));
    for (std::size_t i = 0; i < h; ++i) {
      const double got = decay.data()[t * h + i];
      if (i == 0 || i + 1 == h)
        CHECK(got == 0.0);  // boundaries stay pinned exactly
      else
        CHECK(std::abs(got - scale * sine[i]) < 1e-10);
    }
  }
}

namespace {

DecoderSpec pendulum_spec(Variant v, std::size_t tau) {
  DecoderSpec spec;
  spec.experiment = Experiment::Pendulum;
  spec.variant = v;
  spec.dim_zp = 1;
  spec.dim_za = {2, 2};
  spec.fa1 = MlpSpec{{1 + 2, 16, 1}, Activation::Elu, Activation::None};
  // the out-equation net consumes the whole solved sequence
  spec.fa2 = MlpSpec{{tau + 2, 16, tau}, Activation::Elu, Activation::None};
  return spec;
}

void init_decoder_params(ParamStore& store, const DecoderSpec& spec,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  init_mlp_params(store, spec.fa1_prefix, ParamGroup::Psi, spec.fa1, rng);
  init_mlp_params(store, spec.fa2_prefix, ParamGroup::Psi, spec.fa2, rng);
}

}  // namespace

TEST_CASE("reducing every trainable piece reproduces the physics-only decode") {
  DecoderSpec hybrid = pendulum_spec(Variant::NnPhysReg, 25);
  DecoderSpec phys = pendulum_spec(Variant::PhysOnly, 25);
  ParamStore store;
  init_decoder_params(store, hybrid, 31);

  Tensor z_p = Tensor::from({3, 1}, {1.5, 2.0, 2.5});
  std::mt19937_64 rng(8);
  std::vector<Tensor> z_a = {Tensor::from({3, 2}, testutil::random_vec(rng, 6)),
                             Tensor::from({3, 2}, testutil::random_vec(rng, 6))};
  Tensor ic = Tensor::from({3, 1}, {0.3, -0.5, 0.9});
  UnrollConfig cfg{0.05, 25};

  Tensor reduced = compose_decoder(hybrid, store, z_p, z_a, ic, cfg, {1, 2});
  Tensor phys_only = compose_decoder(phys, store, z_p, z_a, ic, cfg, {});
  CHECK(reduced.data() == phys_only.data());  // bitwise

  // partial reduction differs from both
  Tensor half = compose_decoder(hybrid, store, z_p, z_a, ic, cfg, {2});
  Tensor full = compose_decoder(hybrid, store, z_p, z_a, ic, cfg, {});
  CHECK(half.data() != phys_only.data());
  CHECK(full.data() != half.data());

  CHECK_THROWS(compose_decoder(hybrid, store, z_p, z_a, ic, cfg, {3}));
  // reduction on a physics-only decode is a no-op, never an error
  CHECK(compose_decoder(phys, store, z_p, z_a, ic, cfg, {1}).data() ==
        phys_only.data());
  // the direct map has nothing to reduce
  DecoderSpec nn = pendulum_spec(Variant::NnOnly, 25);
  CHECK_THROWS(compose_decoder(nn, store, z_p, z_a, ic, cfg, {1}));
}

TEST_CASE("identity out-equation net leaves the solved sequence untouched") {
  // single linear layer whose weight is [I; 0] with zero bias copies nu and
  // ignores z_A2; the additions of exact zeros keep the result bit-identical.
  const std::size_t tau = 20;
  DecoderSpec spec = pendulum_spec(Variant::NnPhysReg, tau);
  spec.fa2 = MlpSpec{{tau + 2, tau}, Activation::Elu, Activation::None};
  ParamStore store;
  init_decoder_params(store, spec, 5);
  auto& fa2w = store.get("dec.fa2.w0").node()->value;
  std::fill(fa2w.begin(), fa2w.end(), 0.0);
  for (std::size_t i = 0; i < tau; ++i) fa2w[i * (tau + 2) + i] = 1.0;
  auto& fa2b = store.get("dec.fa2.b0").node()->value;
  std::fill(fa2b.begin(), fa2b.end(), 0.0);
  // zero out f_A1 so the inner ODE matches pure physics too
  for (auto& v : store.get("dec.fa1.w1").node()->value) v = 0.0;
  store.get("dec.fa1.b1").node()->value = {0.0};

  Tensor z_p = Tensor::from({2, 1}, {1.8, 2.2});
  std::mt19937_64 rng(9);
  std::vector<Tensor> z_a = {Tensor::from({2, 2}, testutil::random_vec(rng, 4)),
                             Tensor::from({2, 2}, testutil::random_vec(rng, 4))};
  Tensor ic = Tensor::from({2, 1}, {0.4, -0.8});
  UnrollConfig cfg{0.05, 20};

  Tensor out = compose_decoder(spec, store, z_p, z_a, ic, cfg, {});
  Tensor nu = compose_decoder(spec, store, z_p, z_a, ic, cfg, {1, 2});
  CHECK(out.data() == nu.data());  // bitwise
}

TEST_CASE("gradients through a short unroll match finite differences") {
  DecoderSpec spec = pendulum_spec(Variant::NnPhysReg, 10);
  ParamStore store;
  init_decoder_params(store, spec, 77);

  Tensor z_p = Tensor::leaf({2, 1}, {1.7, 2.1});
  std::mt19937_64 rng(14);
  Tensor za1 = Tensor::leaf({2, 2}, testutil::random_vec(rng, 4));
  Tensor za2 = Tensor::leaf({2, 2}, testutil::random_vec(rng, 4));
  Tensor ic = Tensor::leaf({2, 1}, {0.5, -0.3});
  UnrollConfig cfg{0.05, 10};

  auto loss = [&] {
    Tensor x = compose_decoder(spec, store, z_p, {za1, za2}, ic, cfg, {});
    return mean(square(x));
  };
  GradMap grads;
  {
    Tape tape;
    grads = backward(tape, loss(), store);
  }
  std::vector<double> g_zp(z_p.grad().begin(), z_p.grad().end());
  std::vector<double> g_ic(ic.grad().begin(), ic.grad().end());
  auto f = [&] { return loss().item(); };
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(rel_err(g_zp[i], fd_grad(z_p, i, f), 1e-8) < 1e-4);
    CHECK(rel_err(g_ic[i], fd_grad(ic, i, f), 1e-8) < 1e-4);
  }
  // spot-check decoder net parameters through the whole unroll
  Tensor& w = store.get("dec.fa1.w0");
  for (std::size_t i = 0; i < w.size(); i += 11)
    CHECK(rel_err(grads.at("dec.fa1.w0")[i], fd_grad(w, i, f), 1e-8) < 1e-4);
  Tensor& w2 = store.get("dec.fa2.w0");
  for (std::size_t i = 0; i < w2.size(); i += 11)
    CHECK(rel_err(grads.at("dec.fa2.w0")[i], fd_grad(w2, i, f), 1e-8) < 1e-4);
}

TEST_CASE("advection-diffusion hybrid decode composes physics and net") {
  DecoderSpec spec;
  spec.experiment = Experiment::AdvDif;
  spec.variant = Variant::NnPhysReg;
  spec.dim_za = {2};
  spec.grid_points = 8;
  spec.s_max = 2.0;
  spec.fa1 = MlpSpec{{8 + 2, 16, 8}, Activation::Elu, Activation::None};
  ParamStore store;
  std::mt19937_64 rng(3);
  init_mlp_params(store, spec.fa1_prefix, ParamGroup::Psi, spec.fa1, rng);

  Tensor z_p = Tensor::from({2, 1}, {0.05, 0.08});
  std::vector<Tensor> z_a = {Tensor::from({2, 2}, testutil::random_vec(rng, 4))};
  std::vector<double> ic_v(16, 0.0);
  for (std::size_t i = 1; i < 7; ++i) {
    ic_v[i] = std::sin(std::numbers::pi * double(i) / 7.0);
    ic_v[8 + i] = 0.5 * ic_v[i];
  }
  Tensor ic = Tensor::from({2, 8}, ic_v);
  UnrollConfig cfg{0.02, 15};

  Tensor full = compose_decoder(spec, store, z_p, z_a, ic, cfg, {});
  Tensor reduced = compose_decoder(spec, store, z_p, z_a, ic, cfg, {1});
  CHECK(full.cols() == 8 * 15);
  CHECK(full.data() != reduced.data());
  // boundaries pinned in both
  for (std::size_t t = 0; t < 15; ++t)
    for (std::size_t b = 0; b < 2; ++b) {
      CHECK(full.data()[b * 120 + t * 8] == 0.0);
      CHECK(full.data()[b * 120 + t * 8 + 7] == 0.0);
    }
  CHECK_THROWS(compose_decoder(spec, store, z_p, z_a, ic, cfg, {2}));
}
