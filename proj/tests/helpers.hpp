#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "pivae/tensor.hpp"

namespace testutil {

// Central finite difference of a rebuilt forward pass with respect to one
// entry of a leaf tensor.
inline double fd_grad(pivae::Tensor& leaf, std::size_t i,
                      const std::function<double()>& forward,
                      double h = 1e-5) {
  auto& v = leaf.node()->value;
  const double orig = v[i];
  v[i] = orig + h;
  const double up = forward();
  v[i] = orig - h;
  const double dn = forward();
  v[i] = orig;
  return (up - dn) / (2.0 * h);
}

inline double rel_err(double got, double want, double floor = 1e-8) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n,
                                      double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace testutil
