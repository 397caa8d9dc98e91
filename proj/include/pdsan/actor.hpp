#pragma once

#include "pdsan/encoding.hpp"
#include "pdsan/neurons.hpp"
#include "pdsan/parameters.hpp"
#include "pdsan/rng.hpp"

#include <vector>

namespace pdsan {

/// Architecture and neuron settings of a spiking actor network.
struct SpikingActorConfig {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> hidden{256, 256};
  int pop_size = 10;      // input neurons per state dimension
  int out_pop_size = 10;  // output neurons per action dimension
  int time_window = 5;
  InputCoding coding = InputCoding::pop;
  NeuronType neuron = NeuronType::dn;
  DnParams dn{};
  LifParams lif{};
  double surrogate_window = 0.5;
  double det_delta = kDefaultDetDelta;
  /// Per-neuron learnable (theta_a..theta_d), initialized U(0, 1).
  bool learnable_theta = false;
  /// Keep the recovery-variable path in the backward pass. Forced on when
  /// thetas are learnable (theta_a and theta_b only act through u).
  bool full_recovery_grad = false;
  double theta_clamp = 2.0;
  /// Observation bounds: receptive-field tiling and rate-coding normalization.
  Vector obs_low;
  Vector obs_high;

  int input_size() const;
  /// Widths of the spiking layers, last one = action_dim * out_pop_size.
  std::vector<int> layer_widths() const;
  bool recovery_grad() const { return full_recovery_grad || learnable_theta; }
  void validate() const;
};

/// Everything the backward pass replays. Layer matrices are time-stacked:
/// width x (T1 * batch), where block t holds columns [t*B, (t+1)*B).
struct ForwardTrace {
  int batch = 0;
  int time_window = 0;
  Matrix states;       // raw, n x B
  Matrix stimulation;  // A_E flattened (n*p x B), or normalized states for direct codings
  Matrix inputs;       // o^(t)(0), time-stacked
  std::vector<Matrix> c;
  std::vector<Matrix> v_reset;  // DN: potential after reset, before the update
  std::vector<Matrix> u_reset;  // DN: recovery after reset, before the update
  std::vector<Matrix> v;        // potential compared to threshold
  std::vector<Matrix> o;
  Matrix spike_counts;  // (m * P) x B
  Matrix firing_rates;
  Matrix pre_activation;  // m x B, before tanh
  Matrix actions;

  auto block(const Matrix& m, int t) const { return m.middleCols(static_cast<Eigen::Index>(t) * batch, batch); }
};

/// a_j = tanh(W_d[j] . fr^(j) + b_d[j]) with fr = sc / T1; sc is (m*P) x B.
Matrix decode(const Matrix& spike_counts, int time_window, const Matrix& decoder_w,
              const Matrix& decoder_b, Matrix* pre_activation = nullptr);

/// Population-coded spiking actor (PDSAN with dynamic neurons, PopSAN with
/// LIF neurons). Tensor names: encoder.mu, encoder.sigma, layer<l>.W,
/// layer<l>.b, layer<l>.theta (width x 4, learnable thetas only),
/// decoder.W (m x P), decoder.b (m x 1).
class SpikingActor {
 public:
  SpikingActor() = default;
  SpikingActor(SpikingActorConfig config, Rng& init_rng);
  /// Rebuilds from stored tensors; throws if the layout does not match.
  SpikingActor(SpikingActorConfig config, ParameterSet params);

  const SpikingActorConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int layer_count() const { return static_cast<int>(w_.size()); }

  /// Batched forward over states (n x B). `coding_rng` is needed for the
  /// stochastic codings only.
  ForwardTrace forward(const Matrix& states, Rng* coding_rng = nullptr) const;
  Matrix act(const Matrix& states, Rng* coding_rng = nullptr) const;

  /// Gradients of J for every tensor given dJ/da (m x B, summed over the
  /// batch). The tanh derivative is applied internally.
  ParameterSet backward(const ForwardTrace& trace, const Matrix& grad_actions) const;

  /// sigma >= floor, and thetas clamped when learnable.
  void enforce_constraints();

  DnTheta layer_theta(int layer) const;

  std::size_t weight_index(int layer) const { return w_.at(layer); }
  std::size_t bias_index(int layer) const { return b_.at(layer); }
  std::optional<std::size_t> theta_index(int layer) const;
  std::optional<std::size_t> mu_index() const { return mu_; }
  std::optional<std::size_t> sigma_index() const { return sigma_; }
  std::size_t decoder_w_index() const { return dw_; }
  std::size_t decoder_b_index() const { return db_; }

 private:
  void index_tensors();
  Matrix build_inputs(const Matrix& stimulation, Rng* coding_rng) const;

  SpikingActorConfig config_;
  ParameterSet params_;
  std::optional<std::size_t> mu_, sigma_;
  std::vector<std::size_t> w_, b_, theta_;
  std::size_t dw_ = 0, db_ = 0;
};

}  // namespace pdsan
