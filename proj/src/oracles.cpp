#include "pivae/oracles.hpp"

#include <cmath>

namespace pivae::oracle {

namespace {

// Random probability vector with strictly positive entries.
std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) {
    v = u(rng);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

double kl_discrete(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

BoundCheck marginal_kl_bound_case(std::mt19937_64& rng, std::size_t nx,
                                  std::size_t ny) {
  auto p1 = random_simplex(rng, nx * ny);
  auto p2 = random_simplex(rng, nx * ny);
  std::vector<double> m1(nx, 0.0), m2(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      m1[i] += p1[i * ny + j];
      m2[i] += p2[i * ny + j];
    }
  return {kl_discrete(m1, m2), kl_discrete(p1, p2)};
}

BoundCheck mutual_info_bound_case(std::mt19937_64& rng, std::size_t nx,
                                  std::size_t ny) {
  auto q = random_simplex(rng, nx * ny);  // joint over (x, y)
  auto p = random_simplex(rng, nx);       // arbitrary reference for x
  std::vector<double> qx(nx, 0.0), qy(ny, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      qx[i] += q[i * ny + j];
      qy[j] += q[i * ny + j];
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      mi += q[i * ny + j] * std::log(q[i * ny + j] / (qx[i] * qy[j]));
  double rhs = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    std::vector<double> cond(nx);
    for (std::size_t i = 0; i < nx; ++i) cond[i] = q[i * ny + j] / qy[j];
    rhs += qy[j] * kl_discrete(cond, p);
  }
  return {mi, rhs};
}

BoundCheck predictive_kl_bound_case(std::mt19937_64& rng) {
  constexpr std::size_t NX = 3;   // distinct data points
  constexpr std::size_t NZP = 3;  // z_P states
  constexpr std::size_t NZA = 3;  // z_A states
  constexpr std::size_t NXT = 4;  // observable states

  auto pd = random_simplex(rng, NX);         // empirical data weights
  auto prior_za = random_simplex(rng, NZA);  // z_A prior (reduced encoder)
  auto p_p = random_simplex(rng, NZP);       // arbitrary z_P reference

  // dec_full[zp][za] and dec_red[zp] are conditionals over the observable.
  std::vector<std::vector<double>> dec_red(NZP);
  std::vector<std::vector<std::vector<double>>> dec_full(
      NZP, std::vector<std::vector<double>>(NZA));
  for (std::size_t zp = 0; zp < NZP; ++zp) {
    dec_red[zp] = random_simplex(rng, NXT);
    for (std::size_t za = 0; za < NZA; ++za)
      dec_full[zp][za] = random_simplex(rng, NXT);
  }

  // Encoder tables per data point: q(z_A | x) and q(z_P | z_A, x).
  std::vector<std::vector<double>> q_za(NX);
  std::vector<std::vector<std::vector<double>>> q_zp(
      NX, std::vector<std::vector<double>>(NZA));
  for (std::size_t x = 0; x < NX; ++x) {
    q_za[x] = random_simplex(rng, NZA);
    for (std::size_t za = 0; za < NZA; ++za)
      q_zp[x][za] = random_simplex(rng, NZP);
  }

  // Exact posterior predictives. The reduced model samples z_A from its
  // prior and z_P from the z_A-marginalized posterior.
  std::vector<double> pred_full(NXT, 0.0), pred_red(NXT, 0.0);
  for (std::size_t x = 0; x < NX; ++x) {
    std::vector<double> q_zp_marg(NZP, 0.0);
    for (std::size_t za = 0; za < NZA; ++za)
      for (std::size_t zp = 0; zp < NZP; ++zp)
        q_zp_marg[zp] += q_za[x][za] * q_zp[x][za][zp];
    for (std::size_t za = 0; za < NZA; ++za)
      for (std::size_t zp = 0; zp < NZP; ++zp)
        for (std::size_t xt = 0; xt < NXT; ++xt) {
          pred_full[xt] += pd[x] * q_za[x][za] * q_zp[x][za][zp] *
                           dec_full[zp][za][xt];
          pred_red[xt] +=
              pd[x] * prior_za[za] * q_zp_marg[zp] * dec_red[zp][xt];
        }
  }
  const double lhs = kl_discrete(pred_full, pred_red);

  // Three-term surrogate: expected decoder discrepancy under the full
  // posterior, plus the latent KLs against prior_za and p_p.
  double rhs = 0.0;
  for (std::size_t x = 0; x < NX; ++x) {
    double dec_term = 0.0, zp_term = 0.0;
    for (std::size_t za = 0; za < NZA; ++za) {
      for (std::size_t zp = 0; zp < NZP; ++zp)
        dec_term += q_za[x][za] * q_zp[x][za][zp] *
                    kl_discrete(dec_full[zp][za], dec_red[zp]);
      zp_term += q_za[x][za] * kl_discrete(q_zp[x][za], p_p);
    }
    rhs += pd[x] * (dec_term + zp_term + kl_discrete(q_za[x], prior_za));
  }
  return {lhs, rhs};
}

}  // namespace pivae::oracle
