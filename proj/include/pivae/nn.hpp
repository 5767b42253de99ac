#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pivae/tensor.hpp"

namespace pivae {

enum class Activation { Elu, Relu, Softplus, None };

struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  Activation activation = Activation::Elu;
  Activation output_activation = Activation::None;
};

enum class ParamGroup { Theta, Psi, ParamH };

const char* group_name(ParamGroup g);
ParamGroup group_from_name(const std::string& s);

// Named trainable leaves with deterministic iteration order (insertion
// order). Each parameter belongs to exactly one of the groups theta / psi /
// param_h, which the regularizers and the stop-gradient tests distinguish.
class ParamStore {
 public:
  Tensor& add(const std::string& name, ParamGroup group, Tensor leaf);
  bool has(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  ParamGroup group_of(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  std::vector<std::string> names_in(ParamGroup g) const;
  std::size_t total_size() const;

  void zero_grad();
  // Gradient of the last backward pass; exact zeros for untouched leaves.
  std::vector<double> grad_of(const std::string& name) const;

  // Values snapshot/restore used by checkpointing and the trainer.
  std::map<std::string, std::vector<double>> snapshot() const;
  void restore(const std::map<std::string, std::vector<double>>& values);

 private:
  struct Entry {
    Tensor tensor;
    ParamGroup group;
  };
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

using GradMap = std::map<std::string, std::vector<double>>;

// Runs the reverse sweep and collects d(root)/d(p) for every parameter in the
// store; parameters unreachable from root map to exact zeros.
GradMap backward(Tape& tape, const Tensor& root, const ParamStore& params);

// Glorot-uniform weights, zero biases. Parameters are registered as
// prefix.w0 / prefix.b0 / prefix.w1 / ... with weight l stored out x in.
void init_mlp_params(ParamStore& store, const std::string& prefix,
                     ParamGroup group, const MlpSpec& spec,
                     std::mt19937_64& rng);

Tensor apply_activation(Activation act, const Tensor& x);

// Affine + activation stack; output_activation applied to the last layer.
Tensor mlp_forward(const MlpSpec& spec, const ParamStore& params,
                   const std::string& prefix, const Tensor& input);

}  // namespace pivae
