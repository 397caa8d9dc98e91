#pragma once

#include "pdsan/parameters.hpp"
#include "pdsan/rng.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace pdsan {

enum class Activation { relu, tanh, linear };

Activation parse_activation(std::string_view tag);
std::string_view to_string(Activation a);

/// Layer sizes (input first) and one activation per affine layer.
struct MlpSpec {
  std::vector<int> sizes;
  std::vector<Activation> activations;

  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }
  void validate() const;
};

/// Standard critic architecture: (n+m) -> 256 relu -> 256 relu -> 1 linear.
MlpSpec critic_spec(int state_dim, int action_dim, const std::vector<int>& hidden = {256, 256});

/// Pre-activations and layer inputs recorded by a forward pass.
struct MlpTrace {
  std::vector<Matrix> inputs;          // inputs[k] feeds layer k
  std::vector<Matrix> pre_activations; // W_k x + b_k
  Matrix output;
};

/// Fully connected network on column batches (features x batch). Tensors
/// are named "W<k>" (out x in) and "b<k>" (out x 1).
class Mlp {
 public:
  Mlp() = default;
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  Mlp(MlpSpec spec, Rng& init_rng);

  const MlpSpec& spec() const { return spec_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t layer_count() const { return spec_.activations.size(); }

  Matrix forward(const Matrix& x, MlpTrace* trace = nullptr) const;

  /// Accumulates parameter gradients into `grads` (same layout as params)
  /// and, when requested, returns dJ/dx.
  void backward(const MlpTrace& trace, const Matrix& grad_output, ParameterSet& grads,
                Matrix* grad_input = nullptr) const;

 private:
  MlpSpec spec_;
  ParameterSet params_;
};

/// Q(s, a) = Mlp([s; a]).
class Critic {
 public:
  Critic() = default;
  Critic(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& init_rng);

  RowVector evaluate(const Matrix& states, const Matrix& actions, MlpTrace* trace = nullptr) const;
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  ParameterSet& params() { return net_.params(); }
  const ParameterSet& params() const { return net_.params(); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  Mlp net_;
};

}  // namespace pdsan
