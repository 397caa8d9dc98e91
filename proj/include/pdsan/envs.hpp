#pragma once

#include "pdsan/parameters.hpp"
#include "pdsan/rng.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace pdsan {

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Vector action_low, action_high;
  Vector obs_low, obs_high;
  int max_episode_steps = 1000;

  void validate() const;
};

struct StepResult {
  Vector s_next;
  double reward = 0.0;
  bool done = false;       // true terminal: bootstrap is masked
  bool truncated = false;  // time limit: bootstrap is kept
};

/// Continuous-control task with the gym-style reset/step contract. Actions
/// are given in environment units and clipped to the action bounds.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Vector reset(Rng& rng) = 0;
  virtual StepResult step(const Vector& action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  int elapsed_steps() const { return elapsed_; }

 protected:
  /// Marks truncation at the episode cap unless the step was terminal.
  void finish_step(StepResult& r);
  int elapsed_ = 0;
};

/// Torque-limited swing-up pendulum, theta = 0 upright.
class Pendulum final : public Env {
 public:
  struct Params {
    double g = 10.0;
    double mass = 1.0;
    double length = 1.0;
    double dt = 0.05;
    double max_speed = 8.0;
    double max_torque = 2.0;
  };

  Pendulum();
  explicit Pendulum(Params params, int max_episode_steps = 1000);

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(Rng& rng) override;
  StepResult step(const Vector& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<Pendulum>(*this); }

  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  Vector observation() const;

  static double wrap_angle(double x);

 private:
  Params p_;
  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// 2-D double integrator that must reach a goal position.
class PointMass final : public Env {
 public:
  struct Params {
    double dt = 0.05;
    double max_speed = 1.0;
    double bound = 2.0;  // positions are clipped to [-bound, bound]
    double goal_radius = 0.05;
    double action_cost = 0.01;
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  };

  PointMass();
  explicit PointMass(Params params, int max_episode_steps = 1000);

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(Rng& rng) override;
  StepResult step(const Vector& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMass>(*this); }

  void set_state(const Eigen::Vector2d& pos, const Eigen::Vector2d& vel);
  Vector observation() const;

 private:
  Params p_;
  EnvSpec spec_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
};

std::unique_ptr<Env> make_env(std::string_view name, int max_episode_steps = 1000);

/// Observation mapped to [0, 1] per dimension using the declared bounds.
Vector normalize_obs(const Vector& s, const EnvSpec& spec);

/// Maps an actor output in [-1, 1]^m onto the env's action box.
Vector scale_action(const Vector& unit_action, const EnvSpec& spec);

}  // namespace pdsan
