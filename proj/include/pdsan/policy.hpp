#pragma once

#include "pdsan/actor.hpp"
#include "pdsan/mlp.hpp"

#include <memory>
#include <string>

namespace pdsan {

/// Deterministic actor as seen by TD3: maps state columns to actions in
/// [-1, 1]^m and back-propagates dJ/da into its own parameters. Instances
/// are stateful (the most recent training forward is kept for backward).
class Policy {
 public:
  virtual ~Policy() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::string kind() const = 0;

  virtual Matrix act(const Matrix& states, Rng* coding_rng) const = 0;
  virtual Matrix forward_train(const Matrix& states, Rng* coding_rng) = 0;
  /// Gradient for the most recent forward_train call.
  virtual ParameterSet backward_train(const Matrix& grad_actions) = 0;

  virtual ParameterSet& params() = 0;
  virtual const ParameterSet& params() const = 0;
  virtual void enforce_constraints() {}
  virtual std::unique_ptr<Policy> clone() const = 0;
};

class SpikingPolicy final : public Policy {
 public:
  explicit SpikingPolicy(SpikingActor actor) : actor_(std::move(actor)) {}

  int state_dim() const override { return actor_.config().state_dim; }
  int action_dim() const override { return actor_.config().action_dim; }
  std::string kind() const override { return "spiking"; }

  Matrix act(const Matrix& states, Rng* coding_rng) const override;
  Matrix forward_train(const Matrix& states, Rng* coding_rng) override;
  ParameterSet backward_train(const Matrix& grad_actions) override;

  ParameterSet& params() override { return actor_.params(); }
  const ParameterSet& params() const override { return actor_.params(); }
  void enforce_constraints() override { actor_.enforce_constraints(); }
  std::unique_ptr<Policy> clone() const override;

  SpikingActor& actor() { return actor_; }
  const SpikingActor& actor() const { return actor_; }
  const ForwardTrace& last_trace() const { return trace_; }

 private:
  SpikingActor actor_;
  ForwardTrace trace_;
};

struct MlpActorConfig {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> hidden{256, 256};
  /// Population encoder in front and population decoder behind the body.
  bool population = false;
  int pop_size = 10;
  int out_pop_size = 10;
  Vector obs_low;
  Vector obs_high;

  void validate() const;
};

/// Deep actor: (256 relu, 256 relu, m tanh), or with population coding
/// (encoder, 256 relu, 256 relu, m*P linear, decoder, tanh).
class MlpPolicy final : public Policy {
 public:
  MlpPolicy(MlpActorConfig config, Rng& init_rng);
  MlpPolicy(MlpActorConfig config, const ParameterSet& params);

  int state_dim() const override { return config_.state_dim; }
  int action_dim() const override { return config_.action_dim; }
  std::string kind() const override { return config_.population ? "pop-mlp" : "mlp"; }

  Matrix act(const Matrix& states, Rng* coding_rng) const override;
  Matrix forward_train(const Matrix& states, Rng* coding_rng) override;
  ParameterSet backward_train(const Matrix& grad_actions) override;

  ParameterSet& params() override { return body_.params(); }
  const ParameterSet& params() const override { return body_.params(); }
  void enforce_constraints() override;
  std::unique_ptr<Policy> clone() const override;

  const MlpActorConfig& config() const { return config_; }

 private:
  struct Trace {
    Matrix states;
    Matrix stimulation;
    MlpTrace body;
    Matrix body_out;
    Matrix actions;
  };

  Matrix run(const Matrix& states, Trace* trace) const;
  void index_tensors();

  MlpActorConfig config_;
  Mlp body_;
  std::optional<std::size_t> mu_, sigma_, dw_, db_;
  Trace trace_;
};

}  // namespace pdsan
