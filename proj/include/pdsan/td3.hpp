#pragma once

#include "pdsan/envs.hpp"
#include "pdsan/mlp.hpp"
#include "pdsan/policy.hpp"
#include "pdsan/replay.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace pdsan {

struct Td3Config {
  double gamma = 0.99;
  double eta = 0.005;
  double sigma = 0.1;        // exploration noise
  double sigma_tilde = 0.2;  // target policy smoothing noise
  double clip_c = 0.5;
  int batch_size = 100;
  int policy_delay = 2;
  long total_steps = 100000;
  long eval_every = 10000;
  int eval_episodes = 10;
  long warmup_steps = 1000;
  std::size_t buffer_capacity = 1000000;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::vector<int> critic_hidden{256, 256};
  /// Stop once an evaluation reaches this mean return.
  std::optional<double> stop_at_reward;

  void validate() const;
};

using QFunction = std::function<RowVector(const Matrix& states, const Matrix& actions)>;
using PolicyFunction = std::function<Matrix(const Matrix& states)>;

/// pi(s) + N(0, sigma), clipped to [-1, 1].
Vector select_action(const Policy& actor, const Vector& s, double sigma, Rng& noise_rng,
                     Rng* coding_rng);

/// y = r + gamma * (1 - done) * min_i Q'_i(s', clip(pi'(s') + clip(N(0, sigma~), -c, c))).
RowVector compute_target(const Batch& batch, const PolicyFunction& target_actor, const QFunction& q1,
                         const QFunction& q2, const Td3Config& cfg, Rng& noise_rng);

/// One Adam step on mean (y - Q(s, a))^2. Returns the loss; throws if it is
/// not finite (parameters untouched).
double critic_update(Critic& critic, Adam& optimizer, const Batch& batch, const RowVector& y);

/// Deterministic policy gradient step through critic_1. Returns the norm of
/// the actor gradient.
double actor_update(Policy& actor, Adam& optimizer, const Critic& critic, const Batch& batch,
                    Rng* coding_rng);

struct Td3Agent {
  std::unique_ptr<Policy> actor;
  std::unique_ptr<Policy> actor_target;
  Critic critic1, critic2;
  Critic critic1_target, critic2_target;
  Adam actor_opt, critic1_opt, critic2_opt;

  /// Targets start as exact copies of the online networks.
  static Td3Agent create(std::unique_ptr<Policy> actor, const Td3Config& cfg, Rng& init_rng);
};

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> returns;
};

/// Noise-free rollouts until termination or truncation.
EvalResult evaluate(const Policy& actor, Env& env, int episodes, Rng& env_rng, Rng& coding_rng);

struct LogRow {
  long step = 0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
  double critic_loss = 0.0;
  double actor_grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct TrainHooks {
  std::function<void(const LogRow&)> on_eval;
  /// Called after each evaluation and before an env failure is rethrown.
  std::function<void(long step)> on_checkpoint;
};

/// Algorithm-2 training loop. Random streams are derived from `seed` (and
/// the start step when resuming) so runs are reproducible.
class Td3Trainer {
 public:
  Td3Trainer(Td3Agent& agent, Env& train_env, Env& eval_env, Td3Config cfg, std::uint64_t seed,
             long start_step = 0);

  std::vector<LogRow> run(const TrainHooks& hooks = {});

  /// Single interaction + update; exposed for mechanism tests.
  void step();
  long steps_done() const { return t_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  long actor_updates() const { return actor_updates_; }

 private:
  Td3Agent& agent_;
  Env& env_;
  Env& eval_env_;
  Td3Config cfg_;
  ReplayBuffer buffer_;
  Rng explore_rng_, coding_rng_, replay_rng_, target_rng_, env_rng_, eval_env_rng_, eval_coding_rng_,
      warmup_rng_;
  long t_;
  Vector state_;
  double loss_sum_ = 0.0;
  long loss_count_ = 0;
  double grad_sum_ = 0.0;
  long grad_count_ = 0;
  long actor_updates_ = 0;
};

}  // namespace pdsan
