#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pivae/nn.hpp"

using namespace pivae;
using testutil::fd_grad;
using testutil::random_vec;
using testutil::rel_err;

TEST_CASE("mlp_forward degenerate and affine-identity cases") {
  ParamStore store;
  MlpSpec spec{{3, 4, 2}, Activation::Elu, Activation::None};
  std::mt19937_64 rng(1);
  init_mlp_params(store, "net", ParamGroup::Theta, spec, rng);
  // zero everything: output must be zero for any input
  for (const auto& name : store.names())
    for (auto& v : store.get(name).node()->value) v = 0.0;
  Tensor x = Tensor::from({2, 3}, random_vec(rng, 6));
  Tensor out = mlp_forward(spec, store, "net", x);
  for (double v : out.data()) CHECK(v == 0.0);

  ParamStore lin;
  MlpSpec one{{3, 3}};
  init_mlp_params(lin, "lin", ParamGroup::Theta, one, rng);
  auto& w = lin.get("lin.w0").node()->value;
  w = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  lin.get("lin.b0").node()->value = {0.5, 0.5, 0.5};
  Tensor y = mlp_forward(one, lin, "lin", x);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i] + 0.5));
}

TEST_CASE("mlp_forward deterministic for a fixed seed") {
  MlpSpec spec{{5, 16, 16, 2}, Activation::Elu, Activation::None};
  auto run = [&] {
    ParamStore store;
    std::mt19937_64 rng(42);
    init_mlp_params(store, "n", ParamGroup::Psi, spec, rng);
    Tensor x = Tensor::from({1, 5}, {0.1, -0.2, 0.3, -0.4, 0.5});
    return mlp_forward(spec, store, "n", x).data();
  };
  CHECK(run() == run());
}

TEST_CASE("init_mlp_params: zero biases, seeded, Glorot variance") {
  MlpSpec spec{{40, 60}, Activation::None, Activation::None};
  ParamStore a, b;
  std::mt19937_64 r1(9), r2(9);
  init_mlp_params(a, "n", ParamGroup::Theta, spec, r1);
  init_mlp_params(b, "n", ParamGroup::Theta, spec, r2);
  CHECK(a.get("n.w0").data() == b.get("n.w0").data());
  for (double v : a.get("n.b0").data()) CHECK(v == 0.0);

  // Repeated draws: empirical variance near 2/(fan_in+fan_out).
  const double want = 2.0 / (40.0 + 60.0);
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  std::mt19937_64 r3(123);
  for (int rep = 0; rep < 5; ++rep) {
    ParamStore s;
    init_mlp_params(s, "n", ParamGroup::Theta, spec, r3);
    for (double v : s.get("n.w0").data()) {
      sum += v;
      sumsq += v * v;
      ++n;
    }
  }
  const double var = sumsq / n - (sum / n) * (sum / n);
  CHECK(rel_err(var, want) < 0.1);
}

TEST_CASE("ParamStore grouping and iteration order") {
  ParamStore s;
  s.add("b.one", ParamGroup::Theta, Tensor::leaf({1, 1}, {1.0}));
  s.add("a.two", ParamGroup::Psi, Tensor::leaf({1, 1}, {2.0}));
  s.add("c.three", ParamGroup::ParamH, Tensor::leaf({1, 1}, {3.0}));
  CHECK(s.names() == std::vector<std::string>{"b.one", "a.two", "c.three"});
  CHECK(s.group_of("a.two") == ParamGroup::Psi);
  CHECK(s.names_in(ParamGroup::Theta) == std::vector<std::string>{"b.one"});
  CHECK_THROWS(s.add("b.one", ParamGroup::Theta, Tensor::leaf({1, 1}, {0.0})));
}

TEST_CASE("backward over ParamStore: reachable and unreachable") {
  ParamStore store;
  MlpSpec spec{{2, 8, 1}, Activation::Elu, Activation::None};
  std::mt19937_64 rng(3);
  init_mlp_params(store, "used", ParamGroup::Theta, spec, rng);
  init_mlp_params(store, "unused", ParamGroup::Theta, spec, rng);
  Tensor x = Tensor::from({4, 2}, random_vec(rng, 8));
  GradMap grads;
  {
    Tape tape;
    Tensor root = mean(mlp_forward(spec, store, "used", x));
    grads = backward(tape, root, store);
  }
  for (double g : grads.at("unused.w0")) CHECK(g == 0.0);

  auto forward = [&] { return mean(mlp_forward(spec, store, "used", x)).item(); };
  Tensor& w0 = store.get("used.w0");
  for (std::size_t i = 0; i < w0.size(); i += 3) {
    const double fd = fd_grad(w0, i, forward);
    CHECK(rel_err(grads.at("used.w0")[i], fd, 1e-7) < 1e-5);
  }
}
