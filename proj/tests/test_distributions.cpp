#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pivae/distributions.hpp"

using namespace pivae;
using testutil::fd_grad;
using testutil::rel_err;

namespace {
DiagGaussian gauss(std::vector<double> mean, std::vector<double> var) {
  const std::size_t d = mean.size();
  return {Tensor::from({1, d}, std::move(mean)),
          Tensor::from({1, d}, std::move(var))};
}
}  // namespace

TEST_CASE("kl_diag closed-form values") {
  // identical distributions -> 0
  CHECK(kl_diag(gauss({0.3, -1.2}, {0.7, 2.0}),
                gauss({0.3, -1.2}, {0.7, 2.0})).item() == doctest::Approx(0.0));
  // unit mean shift, unit variances -> 1/2
  CHECK(kl_diag(gauss({1.0}, {1.0}), gauss({0.0}, {1.0})).item() ==
        doctest::Approx(0.5));
  // N(0, 4) vs N(0, 1): 1/2 (4 - 1 - ln 4) = 0.80685281944...
  CHECK(kl_diag(gauss({0.0}, {4.0}), gauss({0.0}, {1.0})).item() ==
        doctest::Approx(0.5 * (4.0 - 1.0 - std::log(4.0))).epsilon(1e-12));
  // dimensions add up
  const double kl2 =
      kl_diag(gauss({1.0, 0.0}, {1.0, 4.0}), gauss({0.0, 0.0}, {1.0, 1.0}))
          .item();
  CHECK(kl2 == doctest::Approx(0.5 + 0.5 * (4.0 - 1.0 - std::log(4.0))));
}

TEST_CASE("kl_diag nonnegative, zero iff equal") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> um(-2.0, 2.0), uv(0.2, 3.0);
  for (int t = 0; t < 200; ++t) {
    auto q = gauss({um(rng), um(rng)}, {uv(rng), uv(rng)});
    auto p = gauss({um(rng), um(rng)}, {uv(rng), uv(rng)});
    CHECK(kl_diag(q, p).item() >= 0.0);
    CHECK(kl_diag(q, q).item() == doctest::Approx(0.0));
  }
}

TEST_CASE("reparam_sample moments and pathwise gradient") {
  const std::size_t n = 100000;
  DiagGaussian q{Tensor::full({n, 1}, 1.5), Tensor::full({n, 1}, 0.25)};
  std::mt19937_64 rng(11);
  Tensor z = reparam_sample(q, rng);
  double s = 0.0, ss = 0.0;
  for (double v : z.data()) {
    s += v;
    ss += v * v;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  const double se_mean = std::sqrt(0.25 / n);
  CHECK(std::abs(mean - 1.5) < 4 * se_mean);
  // SE of sample variance of N(., sigma^2) ~ sigma^2 sqrt(2/n)
  CHECK(std::abs(var - 0.25) < 4 * 0.25 * std::sqrt(2.0 / n));

  // d z / d mean = 1 elementwise; d z / d var = eps / (2 sqrt(var))
  Tensor m = Tensor::leaf({3, 1}, {0.1, 0.2, 0.3});
  Tensor v = Tensor::leaf({3, 1}, {0.5, 1.0, 2.0});
  std::mt19937_64 r2(3);
  {
    Tape tape;
    Tensor draw = reparam_sample({m, v}, r2);
    tape.backward(sum(draw));
  }
  for (double g : m.grad()) CHECK(g == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 3; ++i) {
    std::mt19937_64 r3(3);
    const double eps =
        (reparam_sample({m, v}, r3).data()[i] - m.data()[i]) /
        std::sqrt(v.data()[i]);
    CHECK(rel_err(v.grad()[i], eps / (2.0 * std::sqrt(v.data()[i]))) < 1e-10);
  }
}

TEST_CASE("reparam_sample scales the same underlying noise") {
  // With identical rng state, draws at different (mean, var) must come from
  // the same eps: (z - mean) / sqrt(var) agrees bitwise-closely.
  DiagGaussian a{Tensor::from({2, 2}, {0, 0, 0, 0}),
                 Tensor::from({2, 2}, {1, 1, 1, 1})};
  DiagGaussian b{Tensor::from({2, 2}, {3, -1, 2, 0.5}),
                 Tensor::from({2, 2}, {4, 0.25, 9, 1})};
  std::mt19937_64 r1(21), r2(21);
  Tensor za = reparam_sample(a, r1);
  Tensor zb = reparam_sample(b, r2);
  for (std::size_t i = 0; i < 4; ++i) {
    const double eps_b =
        (zb.data()[i] - b.mean.data()[i]) / std::sqrt(b.var.data()[i]);
    CHECK(rel_err(za.data()[i], eps_b, 1e-12) < 1e-12);
  }
}

TEST_CASE("gauss_logpdf values and structure") {
  // standard normal at 0: -1/2 ln(2 pi) = -0.9189385332...
  CHECK(gauss_logpdf(Tensor::from({1, 1}, {0.0}), gauss({0.0}, {1.0})).item() ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi))
            .epsilon(1e-12));
  // monotone decreasing in |x - mean|
  auto lp = [&](double x) {
    return gauss_logpdf(Tensor::from({1, 1}, {x}), gauss({1.0}, {0.5})).item();
  };
  CHECK(lp(1.0) > lp(1.3));
  CHECK(lp(1.3) > lp(2.0));
  CHECK(lp(0.7) == doctest::Approx(lp(1.3)).epsilon(1e-12));

  // independent recomputation from the formula
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> um(-2.0, 2.0), uv(0.1, 3.0);
  for (int t = 0; t < 50; ++t) {
    const double x = um(rng), mu = um(rng), var = uv(rng);
    const double want = -0.5 * (std::log(2.0 * std::numbers::pi * var) +
                                (x - mu) * (x - mu) / var);
    const double got =
        gauss_logpdf(Tensor::from({1, 1}, {x}), gauss({mu}, {var})).item();
    CHECK(rel_err(got, want, 1e-12) < 1e-12);
  }

  // density integrates to ~1 on a grid
  const double mu = 0.4, var = 0.8, dx = 1e-3;
  double integral = 0.0;
  for (double x = mu - 8.0; x < mu + 8.0; x += dx)
    integral += std::exp(-0.5 * (std::log(2.0 * std::numbers::pi * var) +
                                 (x - mu) * (x - mu) / var)) *
                dx;
  const double got = gauss_logpdf(Tensor::from({1, 1}, {mu}), gauss({mu}, {var}))
                         .item();
  CHECK(std::abs(std::exp(got) * std::sqrt(2.0 * std::numbers::pi * var) - 1.0) <
        1e-10);
  CHECK(std::abs(integral - 1.0) < 1e-4);
}

TEST_CASE("kl_gaussian_decoders quadratic form") {
  Tensor m1 = Tensor::from({1, 2}, {1.0, 3.0});
  Tensor m2 = Tensor::from({1, 2}, {0.0, 1.0});
  Tensor var = Tensor::from({1, 2}, {1.0, 2.0});
  // 1/2 (1/1 + 4/2) = 1.5
  CHECK(kl_gaussian_decoders(m1, m2, var).item() == doctest::Approx(1.5));
  // symmetric in the means, zero at equality
  CHECK(kl_gaussian_decoders(m2, m1, var).item() == doctest::Approx(1.5));
  CHECK(kl_gaussian_decoders(m1, m1, var).item() == 0.0);
  // quadratic in the gap: doubling the gap quadruples the value
  Tensor m3 = Tensor::from({1, 2}, {-1.0, -1.0});  // gap 2x (m1 - m2)
  CHECK(kl_gaussian_decoders(m1, m3, var).item() ==
        doctest::Approx(4.0 * 1.5));
  // agrees with kl_diag when both share the covariance
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> um(-2.0, 2.0), uv(0.2, 2.0);
  for (int t = 0; t < 50; ++t) {
    auto a = gauss({um(rng), um(rng)}, {1.0, 1.0});
    auto b = gauss({um(rng), um(rng)}, {1.0, 1.0});
    const double v1 = uv(rng), v2 = uv(rng);
    a.var = Tensor::from({1, 2}, {v1, v2});
    b.var = a.var;
    CHECK(rel_err(kl_gaussian_decoders(a.mean, b.mean, a.var).item(),
                  kl_diag(a, b).item(), 1e-12) < 1e-10);
  }
}

TEST_CASE("gradients through the distribution ops match finite differences") {
  std::mt19937_64 rng(17);
  Tensor mu = Tensor::leaf({2, 3}, testutil::random_vec(rng, 6));
  Tensor lv = Tensor::leaf({2, 3}, testutil::random_vec(rng, 6, -1.0, 0.5));
  auto loss = [&] {
    DiagGaussian q{mu, exp_(lv)};
    DiagGaussian p{Tensor::zeros({2, 3}), Tensor::full({2, 3}, 1.0)};
    return mean(kl_diag(q, p));
  };
  {
    Tape tape;
    tape.backward(loss());
  }
  std::vector<double> gm(mu.grad().begin(), mu.grad().end());
  std::vector<double> gv(lv.grad().begin(), lv.grad().end());
  auto scalar_loss = [&] { return loss().item(); };
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(rel_err(gm[i], fd_grad(mu, i, scalar_loss), 1e-7) < 1e-5);
    CHECK(rel_err(gv[i], fd_grad(lv, i, scalar_loss), 1e-7) < 1e-5);
  }
}
