#include "pivae/distributions.hpp"

#include <cmath>

namespace pivae {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_cols(const char* op, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": dimension mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor kl_diag(const DiagGaussian& q, const DiagGaussian& p) {
  check_cols("kl_diag", q.mean, p.mean);
  check_cols("kl_diag", q.var, p.var);
  Tensor ratio = mul(q.var, exp_(neg(log_(p.var))));  // vq / vp
  Tensor diff = sub(p.mean, q.mean);
  Tensor quad = mul(square(diff), exp_(neg(log_(p.var))));
  Tensor logterm = sub(log_(p.var), log_(q.var));
  Tensor per_dim = scalar_mul(add(add(ratio, quad),
                                  scalar_add(logterm, -1.0)),
                              0.5);
  return sum_rows(per_dim);
}

Tensor reparam_sample(const DiagGaussian& q, std::mt19937_64& rng) {
  std::size_t m = std::max(q.mean.rows(), q.var.rows());
  std::size_t n = q.mean.cols();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eps(m * n);
  for (auto& e : eps) e = normal(rng);
  Tensor noise = Tensor::from({m, n}, std::move(eps));
  return add(q.mean, mul(sqrt_(q.var), noise));
}

Tensor gauss_logpdf(const Tensor& x, const DiagGaussian& p) {
  check_cols("gauss_logpdf", x, p.mean);
  Tensor logvar = log_(p.var);
  Tensor inv_var = exp_(neg(logvar));
  Tensor quad = mul(square(sub(x, p.mean)), inv_var);
  Tensor per_dim =
      scalar_mul(add(scalar_add(logvar, kLog2Pi), quad), -0.5);
  return sum_rows(per_dim);
}

Tensor kl_gaussian_decoders(const Tensor& mean_full, const Tensor& mean_reduced,
                            const Tensor& obs_var) {
  check_cols("kl_gaussian_decoders", mean_full, mean_reduced);
  Tensor diff = sub(mean_full, mean_reduced);
  Tensor quad = mul(square(diff), exp_(neg(log_(obs_var))));
  return scalar_mul(sum_rows(quad), 0.5);
}

}  // namespace pivae
