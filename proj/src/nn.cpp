#include "pivae/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace pivae {

const char* group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::Theta: return "theta";
    case ParamGroup::Psi: return "psi";
    case ParamGroup::ParamH: return "param_h";
  }
  return "?";
}

ParamGroup group_from_name(const std::string& s) {
  if (s == "theta") return ParamGroup::Theta;
  if (s == "psi") return ParamGroup::Psi;
  if (s == "param_h") return ParamGroup::ParamH;
  throw TensorError("unknown parameter group: " + s);
}

Tensor& ParamStore::add(const std::string& name, ParamGroup group,
                        Tensor leaf) {
  if (entries_.count(name))
    throw TensorError("ParamStore: duplicate parameter name " + name);
  auto [it, ok] = entries_.emplace(name, Entry{std::move(leaf), group});
  order_.push_back(name);
  return it->second.tensor;
}

bool ParamStore::has(const std::string& name) const {
  return entries_.count(name) != 0;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw TensorError("ParamStore: unknown parameter " + name);
  return it->second.tensor;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw TensorError("ParamStore: unknown parameter " + name);
  return it->second.tensor;
}

ParamGroup ParamStore::group_of(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw TensorError("ParamStore: unknown parameter " + name);
  return it->second.group;
}

std::vector<std::string> ParamStore::names_in(ParamGroup g) const {
  std::vector<std::string> out;
  for (const auto& n : order_)
    if (entries_.at(n).group == g) out.push_back(n);
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += entries_.at(name).tensor.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries_) e.tensor.node()->grad.clear();
}

std::vector<double> ParamStore::grad_of(const std::string& name) const {
  const Tensor& t = get(name);
  if (t.node()->grad.empty()) return std::vector<double>(t.size(), 0.0);
  return t.node()->grad;
}

std::map<std::string, std::vector<double>> ParamStore::snapshot() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, e] : entries_) out[name] = e.tensor.data();
  return out;
}

void ParamStore::restore(
    const std::map<std::string, std::vector<double>>& values) {
  for (const auto& [name, v] : values) {
    Tensor& t = get(name);
    if (t.size() != v.size())
      throw ShapeError("ParamStore::restore: size mismatch for " + name);
    t.node()->value = v;
  }
}

GradMap backward(Tape& tape, const Tensor& root, const ParamStore& params) {
  // the map reflects this sweep only, not leftovers from earlier passes
  for (const auto& name : params.names()) params.get(name).node()->grad.clear();
  tape.backward(root);
  GradMap out;
  for (const auto& name : params.names()) out[name] = params.grad_of(name);
  return out;
}

void init_mlp_params(ParamStore& store, const std::string& prefix,
                     ParamGroup group, const MlpSpec& spec,
                     std::mt19937_64& rng) {
  if (spec.layer_sizes.size() < 2)
    throw TensorError("MlpSpec for " + prefix + " needs at least 2 layers");
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    std::size_t fan_in = spec.layer_sizes[l];
    std::size_t fan_out = spec.layer_sizes[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(fan_out * fan_in);
    for (auto& v : w) v = dist(rng);
    store.add(prefix + ".w" + std::to_string(l), group,
              Tensor::leaf({fan_out, fan_in}, std::move(w)));
    store.add(prefix + ".b" + std::to_string(l), group,
              Tensor::leaf({1, fan_out},
                           std::vector<double>(fan_out, 0.0)));
  }
}

Tensor apply_activation(Activation act, const Tensor& x) {
  switch (act) {
    case Activation::Elu: return elu(x);
    case Activation::Relu: return relu(x);
    case Activation::Softplus: return softplus(x);
    case Activation::None: return x;
  }
  return x;
}

Tensor mlp_forward(const MlpSpec& spec, const ParamStore& params,
                   const std::string& prefix, const Tensor& input) {
  if (input.cols() != spec.layer_sizes.front())
    throw ShapeError("mlp_forward(" + prefix + "): input width " +
                     std::to_string(input.cols()) + " != layer 0 size " +
                     std::to_string(spec.layer_sizes.front()));
  Tensor h = input;
  std::size_t n_layers = spec.layer_sizes.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Tensor& w = params.get(prefix + ".w" + std::to_string(l));
    const Tensor& b = params.get(prefix + ".b" + std::to_string(l));
    if (w.cols() != h.cols())
      throw ShapeError("mlp_forward(" + prefix + "): layer " +
                       std::to_string(l) + " expects width " +
                       std::to_string(w.cols()) + ", got " +
                       std::to_string(h.cols()));
    h = add(matmul_nt(h, w), b);
    h = apply_activation(
        l + 1 < n_layers ? spec.activation : spec.output_activation, h);
  }
  return h;
}

}  // namespace pivae
