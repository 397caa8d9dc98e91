#include "pdsan/td3.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pdsan {

void Td3Config::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("td3: gamma must lie in [0, 1]");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("td3: eta must lie in (0, 1)");
  if (sigma < 0.0 || sigma_tilde < 0.0 || clip_c < 0.0) throw std::invalid_argument("td3: noise scales must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("td3: batch_size must be >= 1");
  if (policy_delay < 1) throw std::invalid_argument("td3: policy_delay must be >= 1");
  if (total_steps < 0 || warmup_steps < 0) throw std::invalid_argument("td3: step counts must be >= 0");
  if (eval_every < 1) throw std::invalid_argument("td3: eval_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("td3: eval_episodes must be >= 1");
  if (buffer_capacity < 1) throw std::invalid_argument("td3: buffer_capacity must be >= 1");
  if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) throw std::invalid_argument("td3: learning rates must be >= 0");
}

Vector select_action(const Policy& actor, const Vector& s, double sigma, Rng& noise_rng,
                     Rng* coding_rng) {
  Vector a = actor.act(s, coding_rng).col(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += noise_rng.normal(0.0, sigma);
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

RowVector compute_target(const Batch& batch, const PolicyFunction& target_actor, const QFunction& q1,
                         const QFunction& q2, const Td3Config& cfg, Rng& noise_rng) {
  if (batch.size() == 0) throw std::invalid_argument("compute_target: empty batch");
  Matrix a = target_actor(batch.next_states);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double eps = std::clamp(noise_rng.normal(0.0, cfg.sigma_tilde), -cfg.clip_c, cfg.clip_c);
      a(i, j) = std::clamp(a(i, j) + eps, -1.0, 1.0);
    }
  }
  const RowVector v1 = q1(batch.next_states, a);
  const RowVector v2 = q2(batch.next_states, a);
  RowVector y(batch.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    y[j] = batch.rewards[j];
    if (batch.done[j] == 0.0) y[j] += cfg.gamma * std::min(v1[j], v2[j]);
  }
  return y;
}

double critic_update(Critic& critic, Adam& optimizer, const Batch& batch, const RowVector& y) {
  MlpTrace trace;
  const RowVector q = critic.evaluate(batch.states, batch.actions, &trace);
  const RowVector diff = q - y;
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) throw std::runtime_error("critic_update: non-finite loss");
  const Matrix grad_q = 2.0 * diff / n;
  ParameterSet grads = critic.params().zeros_like();
  critic.net().backward(trace, grad_q, grads);
  optimizer.step(critic.params(), grads);
  return loss;
}

double actor_update(Policy& actor, Adam& optimizer, const Critic& critic, const Batch& batch,
                    Rng* coding_rng) {
  const Matrix actions = actor.forward_train(batch.states, coding_rng);
  MlpTrace trace;
  critic.evaluate(batch.states, actions, &trace);
  // J = -mean Q(s, pi(s)).
  const Matrix grad_q = Matrix::Constant(1, batch.size(), -1.0 / static_cast<double>(batch.size()));
  ParameterSet unused = critic.params().zeros_like();
  Matrix grad_x;
  critic.net().backward(trace, grad_q, unused, &grad_x);
  const Matrix grad_a = grad_x.bottomRows(actor.action_dim());
  ParameterSet grads = actor.backward_train(grad_a);
  const double norm = std::sqrt(grads.squared_norm());
  optimizer.step(actor.params(), grads);
  actor.enforce_constraints();
  return norm;
}

Td3Agent Td3Agent::create(std::unique_ptr<Policy> actor, const Td3Config& cfg, Rng& init_rng) {
  Td3Agent agent;
  const int n = actor->state_dim();
  const int m = actor->action_dim();
  agent.actor = std::move(actor);
  agent.actor_target = agent.actor->clone();
  agent.critic1 = Critic(n, m, cfg.critic_hidden, init_rng);
  agent.critic2 = Critic(n, m, cfg.critic_hidden, init_rng);
  agent.critic1_target = agent.critic1;
  agent.critic2_target = agent.critic2;
  agent.actor_opt = Adam(agent.actor->params(), AdamConfig{cfg.actor_lr});
  agent.critic1_opt = Adam(agent.critic1.params(), AdamConfig{cfg.critic_lr});
  agent.critic2_opt = Adam(agent.critic2.params(), AdamConfig{cfg.critic_lr});
  return agent;
}

EvalResult evaluate(const Policy& actor, Env& env, int episodes, Rng& env_rng, Rng& coding_rng) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  EvalResult res;
  for (int e = 0; e < episodes; ++e) {
    Vector s = env.reset(env_rng);
    double total = 0.0;
    while (true) {
      const Vector a = actor.act(s, &coding_rng).col(0);
      StepResult r = env.step(scale_action(a, env.spec()));
      total += r.reward;
      s = std::move(r.s_next);
      if (r.done || r.truncated) break;
    }
    res.returns.push_back(total);
  }
  const double n = static_cast<double>(episodes);
  res.mean = std::accumulate(res.returns.begin(), res.returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : res.returns) ss += (x - res.mean) * (x - res.mean);
  res.stddev = std::sqrt(ss / n);
  return res;
}

namespace {

Rng stream_for(std::uint64_t seed, std::uint64_t id, long start_step) {
  Rng r = Rng(seed).split(id);
  return start_step == 0 ? r : r.split(static_cast<std::uint64_t>(start_step));
}

}  // namespace

Td3Trainer::Td3Trainer(Td3Agent& agent, Env& train_env, Env& eval_env, Td3Config cfg, std::uint64_t seed,
                       long start_step)
    : agent_(agent), env_(train_env), eval_env_(eval_env), cfg_(std::move(cfg)),
      buffer_(agent.actor->state_dim(), agent.actor->action_dim(), cfg_.buffer_capacity),
      explore_rng_(stream_for(seed, stream::exploration, start_step)),
      coding_rng_(stream_for(seed, stream::coding, start_step)),
      replay_rng_(stream_for(seed, stream::replay, start_step)),
      target_rng_(stream_for(seed, stream::target_noise, start_step)),
      env_rng_(stream_for(seed, stream::env, start_step)),
      eval_env_rng_(stream_for(seed, stream::eval_env, start_step)),
      eval_coding_rng_(stream_for(seed, stream::eval_coding, start_step)),
      warmup_rng_(stream_for(seed, stream::warmup, start_step)),
      t_(start_step) {
  cfg_.validate();
  if (env_.spec().state_dim != agent.actor->state_dim() || env_.spec().action_dim != agent.actor->action_dim()) {
    throw std::invalid_argument("td3: env and actor dimensions differ");
  }
  state_ = env_.reset(env_rng_);
}

void Td3Trainer::step() {
  ++t_;
  const int m = agent_.actor->action_dim();
  Vector a(m);
  if (t_ <= cfg_.warmup_steps) {
    for (int i = 0; i < m; ++i) a[i] = warmup_rng_.uniform(-1.0, 1.0);
  } else {
    a = select_action(*agent_.actor, state_, cfg_.sigma, explore_rng_, &coding_rng_);
  }
  StepResult r = env_.step(scale_action(a, env_.spec()));
  buffer_.add({state_, a, r.reward, r.s_next, r.done, r.truncated});
  state_ = (r.done || r.truncated) ? env_.reset(env_rng_) : std::move(r.s_next);

  if (t_ <= cfg_.warmup_steps || buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) return;

  const Batch batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), replay_rng_);
  Policy& target = *agent_.actor_target;
  Rng& coding = coding_rng_;
  const RowVector y = compute_target(
      batch, [&](const Matrix& s) { return target.act(s, &coding); },
      [&](const Matrix& s, const Matrix& act) { return agent_.critic1_target.evaluate(s, act); },
      [&](const Matrix& s, const Matrix& act) { return agent_.critic2_target.evaluate(s, act); }, cfg_,
      target_rng_);
  const double l1 = critic_update(agent_.critic1, agent_.critic1_opt, batch, y);
  const double l2 = critic_update(agent_.critic2, agent_.critic2_opt, batch, y);
  loss_sum_ += 0.5 * (l1 + l2);
  ++loss_count_;

  if (t_ % cfg_.policy_delay == 0) {
    grad_sum_ += actor_update(*agent_.actor, agent_.actor_opt, agent_.critic1, batch, &coding_rng_);
    ++grad_count_;
    ++actor_updates_;
    soft_update(agent_.critic1_target.params(), agent_.critic1.params(), cfg_.eta);
    soft_update(agent_.critic2_target.params(), agent_.critic2.params(), cfg_.eta);
    soft_update(agent_.actor_target->params(), agent_.actor->params(), cfg_.eta);
  }
}

std::vector<LogRow> Td3Trainer::run(const TrainHooks& hooks) {
  std::vector<LogRow> log;
  auto last = std::chrono::steady_clock::now();
  while (t_ < cfg_.total_steps) {
    try {
      step();
    } catch (...) {
      if (hooks.on_checkpoint) hooks.on_checkpoint(t_);
      throw;
    }
    if (t_ % cfg_.eval_every != 0) continue;

    const EvalResult ev = evaluate(*agent_.actor, eval_env_, cfg_.eval_episodes, eval_env_rng_, eval_coding_rng_);
    const auto now = std::chrono::steady_clock::now();
    LogRow row;
    row.step = t_;
    row.eval_mean = ev.mean;
    row.eval_std = ev.stddev;
    row.critic_loss = loss_count_ ? loss_sum_ / static_cast<double>(loss_count_) : 0.0;
    row.actor_grad_norm = grad_count_ ? grad_sum_ / static_cast<double>(grad_count_) : 0.0;
    row.wall_ms = std::chrono::duration<double, std::milli>(now - last).count();
    last = now;
    loss_sum_ = grad_sum_ = 0.0;
    loss_count_ = grad_count_ = 0;
    log.push_back(row);
    if (hooks.on_eval) hooks.on_eval(row);
    if (hooks.on_checkpoint) hooks.on_checkpoint(t_);
    if (cfg_.stop_at_reward && ev.mean >= *cfg_.stop_at_reward) break;
  }
  return log;
}

}  // namespace pdsan
