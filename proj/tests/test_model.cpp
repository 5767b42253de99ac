#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "helpers.hpp"
#include "pivae/data.hpp"
#include "pivae/model.hpp"

using namespace pivae;

namespace {
Tensor batch_from(const SequenceDataset& ds, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return pack_batch(ds.sequences, idx);
}
}  // namespace

TEST_CASE("encode: shapes, positivity of q_P, determinism") {
  for (Experiment exp : {Experiment::Pendulum, Experiment::AdvDif}) {
    PiVaeModel m = build_model(exp, Variant::NnPhysReg, 3);
    SequenceDataset ds =
        exp == Experiment::Pendulum ? gen_pendulum(5, 1) : gen_advdif(5, 1);
    Tensor x = batch_from(ds, 5);
    std::mt19937_64 r1(10), r2(10), r3(11);
    EncoderOutput e1 = m.encode(x, r1);
    EncoderOutput e2 = m.encode(x, r2);
    EncoderOutput e3 = m.encode(x, r3);

    REQUIRE(e1.q_a.size() == m.n_za_blocks());
    for (std::size_t k = 0; k < e1.q_a.size(); ++k) {
      CHECK(e1.z_a[k].rows() == 5);
      CHECK(e1.z_a[k].cols() == m.cfg.decoder.dim_za[k]);
      CHECK(e1.z_a[k].data() == e2.z_a[k].data());  // same rng -> bitwise
      CHECK(e1.z_a[k].data() != e3.z_a[k].data());
    }
    CHECK(e1.q_p.mean.rows() == 5);
    CHECK(e1.q_p.mean.cols() == 1);
    for (double v : e1.q_p.mean.data()) CHECK(v > 0.0);  // softplus head
    for (double v : e1.q_p.var.data()) CHECK(v > 0.0);
    CHECK(e1.z_p.data() == e2.z_p.data());
    CHECK(e1.cleansed.cols() == m.cfg.x_dim);
  }
}

TEST_CASE("latent layout per experiment and variant") {
  PiVaeModel pend = build_model(Experiment::Pendulum, Variant::NnPhysReg, 1);
  CHECK(pend.n_za_blocks() == 2);
  CHECK(pend.cfg.decoder.n_trainable() == 2);
  CHECK(pend.has_zp());

  PiVaeModel adv = build_model(Experiment::AdvDif, Variant::NnPhysReg, 1);
  CHECK(adv.n_za_blocks() == 1);
  CHECK(adv.cfg.decoder.n_trainable() == 1);

  PiVaeModel phys = build_model(Experiment::Pendulum, Variant::PhysOnly, 1);
  CHECK(phys.n_za_blocks() == 0);
  CHECK(phys.has_zp());

  PiVaeModel nn = build_model(Experiment::Pendulum, Variant::NnOnly, 1);
  CHECK_FALSE(nn.has_zp());
  CHECK(nn.cfg.decoder.n_trainable() == 0);
}

TEST_CASE("physics-only pendulum decoder only trains the observation variance") {
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::PhysOnly, 4);
  auto theta = m.params.names_in(ParamGroup::Theta);
  REQUIRE(theta.size() == 1);
  CHECK(theta[0] == "dec.logvar_x");
}

TEST_CASE("q_P conditions on the sampled z_A") {
  // widening the z_A posterior changes the z_A sample, which must move the
  // cleansed signal and hence q_P: the hierarchy is really conditional.
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::NnPhysReg, 6);
  SequenceDataset ds = gen_pendulum(3, 2);
  Tensor x = batch_from(ds, 3);
  std::mt19937_64 r1(7), r2(7);
  EncoderOutput base = m.encode(x, r1);
  for (std::size_t k = 0; k < m.n_za_blocks(); ++k)
    for (auto& v : m.params.get("enc.logvar_za" + std::to_string(k + 1))
                       .node()
                       ->value)
      v += 4.0;
  EncoderOutput wide = m.encode(x, r2);
  CHECK(wide.z_a[0].data() != base.z_a[0].data());
  CHECK(wide.q_p.mean.data() != base.q_p.mean.data());
}

TEST_CASE("tiny posterior variance pins the sample to the mean") {
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::NnPhysReg, 8);
  for (const auto& name : m.params.names())
    if (name.starts_with("enc.logvar"))
      for (auto& v : m.params.get(name).node()->value) v = -120.0;
  SequenceDataset ds = gen_pendulum(4, 3);
  Tensor x = batch_from(ds, 4);
  std::mt19937_64 rng(1);
  EncoderOutput e = m.encode(x, rng);
  for (std::size_t i = 0; i < e.z_p.size(); ++i)
    CHECK(std::abs(e.z_p.data()[i] - e.q_p.mean.data()[i]) < 1e-20);
}

TEST_CASE("decode period tracks z_P for the physics-only pendulum") {
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::PhysOnly, 5);
  const double omega = 2.0;
  Tensor z_p = Tensor::from({1, 1}, {omega});
  Tensor ic = Tensor::from({1, 1}, {0.05});  // small angle
  Tensor seq = m.decode_mean(z_p, {}, ic, {}, 400);
  // measure the period from downward zero crossings
  std::vector<double> crossings;
  const auto& v = seq.data();
  for (std::size_t t = 1; t < v.size(); ++t)
    if (v[t - 1] > 0.0 && v[t] <= 0.0) {
      const double frac = v[t - 1] / (v[t - 1] - v[t]);
      crossings.push_back((double(t - 1) + frac) * m.cfg.unroll.dt);
    }
  REQUIRE(crossings.size() >= 3);
  const double period = crossings[2] - crossings[1];
  CHECK(std::abs(period - 2.0 * std::numbers::pi / omega) <
        0.05 * 2.0 * std::numbers::pi / omega);
}

TEST_CASE("physics-only decode equals a hand-rolled explicit unroll") {
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::NnPhysReg, 9);
  const double omega = 1.7, theta0 = 0.4, dt = m.cfg.unroll.dt;
  Tensor seq = m.physics_only_signal(Tensor::from({1, 1}, {omega}),
                                     Tensor::from({1, 1}, {theta0}));
  double th = theta0, thd = 0.0;
  for (std::size_t t = 0; t < m.cfg.unroll.steps; ++t) {
    CHECK(seq.data()[t] == doctest::Approx(th).epsilon(1e-14));
    const double a = -omega * omega * std::sin(th);
    th += dt * thd;
    thd += dt * a;
  }
  // and matches decode_mean with everything reduced, bitwise
  std::mt19937_64 rng(2);
  std::vector<Tensor> z_a = {Tensor::from({1, 1}, {0.3}),
                             Tensor::from({1, 2}, {0.1, -0.2})};
  Tensor reduced = m.decode_mean(Tensor::from({1, 1}, {omega}), z_a,
                                 Tensor::from({1, 1}, {theta0}),
                                 m.all_reduced());
  CHECK(reduced.data() == seq.data());
}

TEST_CASE("physics-only advdif decode decays monotonically") {
  PiVaeModel m = build_model(Experiment::AdvDif, Variant::NnPhysReg, 12);
  const std::size_t h = m.cfg.decoder.grid_points;
  std::vector<double> ic(h, 0.0);
  for (std::size_t i = 1; i + 1 < h; ++i)
    ic[i] = std::sin(std::numbers::pi * double(i) / double(h - 1));
  Tensor seq = m.physics_only_signal(Tensor::from({1, 1}, {0.06}),
                                     Tensor::from({1, h}, ic));
  auto norm = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t i = 0; i < h; ++i)
      s += seq.data()[t * h + i] * seq.data()[t * h + i];
    return s;
  };
  for (std::size_t t = 1; t < m.cfg.unroll.steps; ++t)
    CHECK(norm(t) < norm(t - 1));
}

TEST_CASE("decode memo keeps partially reduced means bit-identical") {
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::NnPhysReg, 13);
  SequenceDataset ds = gen_pendulum(3, 4);
  Tensor x = batch_from(ds, 3);
  std::mt19937_64 rng(5);
  EncoderOutput e = m.encode(x, rng);
  Tensor ic = m.ic_from(x);

  DecodeMemo memo;
  Tensor a0 = m.decode_mean(e.z_p, e.z_a, ic, {}, 0, &memo);
  Tensor a1 = m.decode_mean(e.z_p, e.z_a, ic, {1}, 0, &memo);
  Tensor a2 = m.decode_mean(e.z_p, e.z_a, ic, {2}, 0, &memo);
  Tensor a12 = m.decode_mean(e.z_p, e.z_a, ic, {1, 2}, 0, &memo);

  CHECK(a0.data() == m.decode_mean(e.z_p, e.z_a, ic, {}).data());
  CHECK(a1.data() == m.decode_mean(e.z_p, e.z_a, ic, {1}).data());
  CHECK(a2.data() == m.decode_mean(e.z_p, e.z_a, ic, {2}).data());
  CHECK(a12.data() == m.decode_mean(e.z_p, e.z_a, ic, {1, 2}).data());
}

TEST_CASE("reduced_posterior_sample draws z_A from the standard prior") {
  PiVaeModel m = build_model(Experiment::Pendulum, Variant::NnPhysReg, 14);
  SequenceDataset ds = gen_pendulum(2, 6);
  // repeat two sequences many times to collect draws
  std::vector<std::size_t> idx(3000);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i % 2;
  Tensor x = pack_batch(ds.sequences, idx);
  std::mt19937_64 rng(77);
  auto rs = m.reduced_posterior_sample(x, rng);
  double s = 0.0, ss = 0.0;
  std::size_t n = 0;
  for (const auto& z : rs.z_a)
    for (double v : z.data()) {
      s += v;
      ss += v * v;
      ++n;
    }
  const double mean = s / double(n);
  const double var = ss / double(n) - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / double(n)));
  for (double v : rs.z_p.data()) CHECK(v > 0.0);
}

TEST_CASE("checkpoint round trip reproduces values and decodes bitwise") {
  PiVaeModel m = build_model(Experiment::AdvDif, Variant::NnPhysReg, 21);
  // perturb a few parameters so the file is not just the init
  std::mt19937_64 prng(3);
  for (auto& v : m.params.get("dec.logvar_x").node()->value) v = -3.7;
  const std::string path = "/tmp/pivae_test_model.ckpt";
  save_checkpoint(m, path);
  PiVaeModel back = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(back.cfg.decoder.experiment == m.cfg.decoder.experiment);
  CHECK(back.cfg.decoder.variant == m.cfg.decoder.variant);
  CHECK(back.cfg.unroll.dt == m.cfg.unroll.dt);
  for (const auto& name : m.params.names())
    CHECK(back.params.get(name).data() == m.params.get(name).data());

  SequenceDataset ds = gen_advdif(2, 8);
  Tensor x = batch_from(ds, 2);
  std::mt19937_64 r1(9), r2(9);
  EncoderOutput e1 = m.encode(x, r1);
  EncoderOutput e2 = back.encode(x, r2);
  Tensor d1 = m.decode_mean(e1.z_p, e1.z_a, m.ic_from(x), {});
  Tensor d2 = back.decode_mean(e2.z_p, e2.z_a, back.ic_from(x), {});
  CHECK(d1.data() == d2.data());
}

TEST_CASE("model seeds give deterministic init, ic_from slices, obs_var") {
  PiVaeModel a = build_model(Experiment::Pendulum, Variant::NnPhys, 30);
  PiVaeModel b = build_model(Experiment::Pendulum, Variant::NnPhys, 30);
  PiVaeModel c = build_model(Experiment::Pendulum, Variant::NnPhys, 31);
  CHECK(a.params.get("dec.fa1.w0").data() == b.params.get("dec.fa1.w0").data());
  CHECK(a.params.get("dec.fa1.w0").data() != c.params.get("dec.fa1.w0").data());

  Tensor x = Tensor::from({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  // pendulum IC is the first observation of each row
  PiVaeModel toy = a;
  toy.cfg.x_dim = 4;
  toy.cfg.unroll.steps = 4;
  Tensor ic = toy.ic_from(x);
  CHECK(ic.data() == std::vector<double>{1, 5});

  CHECK(a.obs_var().item() == doctest::Approx(a.cfg.sigma_x_init));
}
