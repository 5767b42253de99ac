#include "pivae/physics.hpp"

namespace pivae {

Tensor pendulum_accel(const Tensor& theta, const Tensor& z_p) {
  return neg(mul(square(z_p), sin_(theta)));
}

Tensor diffusion_rate(const Tensor& T, const Tensor& z_p, double s_max) {
  std::size_t h = T.cols();
  if (h < 3)
    throw ShapeError("diffusion_rate: grid needs at least 3 points, got " +
                     std::to_string(h));
  double ds = s_max / static_cast<double>(h - 1);
  Tensor left = slice_cols(T, 0, h - 2);
  Tensor center = slice_cols(T, 1, h - 1);
  Tensor right = slice_cols(T, 2, h);
  Tensor lap = scalar_mul(add(sub(left, scalar_mul(center, 2.0)), right),
                          1.0 / (ds * ds));
  Tensor interior = mul(z_p, lap);  // z_p column broadcasts across cols
  Tensor zero_col = Tensor::zeros({T.rows(), 1});
  return concat_cols({zero_col, interior, zero_col});
}

void init_affine_baseline(ParamStore& store, const std::string& prefix,
                          std::size_t d_out, std::size_t d_in) {
  std::vector<double> w(d_out * d_in, 0.0);
  for (std::size_t i = 0; i < std::min(d_out, d_in); ++i) w[i * d_in + i] = 1.0;
  store.add(prefix + ".w", ParamGroup::ParamH,
            Tensor::leaf({d_out, d_in}, std::move(w)));
  store.add(prefix + ".b", ParamGroup::ParamH,
            Tensor::leaf({1, d_out}, std::vector<double>(d_out, 0.0)));
}

Tensor apply_baseline(const BaselineFn& b, const Tensor& y,
                      const ParamStore& params) {
  switch (b.kind) {
    case BaselineFn::Kind::Zero:
      return Tensor::zeros({y.rows(), y.cols()});
    case BaselineFn::Kind::Identity:
      return y;
    case BaselineFn::Kind::Affine: {
      const Tensor& w = params.get(b.param_prefix + ".w");
      const Tensor& bias = params.get(b.param_prefix + ".b");
      if (w.cols() != y.cols())
        throw ShapeError("apply_baseline: affine weight " +
                         shape_str(w.shape()) + " incompatible with input " +
                         shape_str(y.shape()));
      return add(matmul_nt(y, w), bias);
    }
  }
  return y;
}

}  // namespace pivae
