#include "pdsan/envs.hpp"

#include "pdsan/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pdsan {

void EnvSpec::validate() const {
  if (action_low.size() != action_dim || action_high.size() != action_dim ||
      obs_low.size() != state_dim || obs_high.size() != state_dim) {
    throw std::invalid_argument("env spec: bound sizes do not match dimensions");
  }
  if (!(action_low.array() < action_high.array()).all() || !(obs_low.array() < obs_high.array()).all()) {
    throw std::invalid_argument("env spec: low must be below high");
  }
  if (max_episode_steps < 1) throw std::invalid_argument("env spec: max_episode_steps must be >= 1");
}

void Env::finish_step(StepResult& r) {
  ++elapsed_;
  r.truncated = !r.done && elapsed_ >= spec().max_episode_steps;
}

Pendulum::Pendulum() : Pendulum(Params{}) {}

Pendulum::Pendulum(Params params, int max_episode_steps) : p_(params) {
  spec_.name = "pendulum";
  spec_.state_dim = 3;
  spec_.action_dim = 1;
  spec_.action_low = Vector::Constant(1, -p_.max_torque);
  spec_.action_high = Vector::Constant(1, p_.max_torque);
  spec_.obs_low = Vector(3);
  spec_.obs_low << -1.0, -1.0, -p_.max_speed;
  spec_.obs_high = Vector(3);
  spec_.obs_high << 1.0, 1.0, p_.max_speed;
  spec_.max_episode_steps = max_episode_steps;
  spec_.validate();
}

double Pendulum::wrap_angle(double x) {
  constexpr double pi = std::numbers::pi;
  double y = std::fmod(x + pi, 2.0 * pi);
  if (y < 0.0) y += 2.0 * pi;
  return y - pi;
}

Vector Pendulum::observation() const {
  Vector o(3);
  o << std::cos(theta_), std::sin(theta_), theta_dot_;
  return o;
}

void Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  elapsed_ = 0;
}

Vector Pendulum::reset(Rng& rng) {
  theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  elapsed_ = 0;
  return observation();
}

StepResult Pendulum::step(const Vector& action) {
  if (action.size() != 1) throw std::invalid_argument("pendulum: action must have one entry");
  const double u = std::clamp(action[0], -p_.max_torque, p_.max_torque);
  const double th = wrap_angle(theta_);
  const double cost = th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  const double acc = 3.0 * p_.g / (2.0 * p_.length) * std::sin(theta_) +
                     3.0 / (p_.mass * p_.length * p_.length) * u;
  theta_dot_ = std::clamp(theta_dot_ + acc * p_.dt, -p_.max_speed, p_.max_speed);
  theta_ = theta_ + theta_dot_ * p_.dt;

  StepResult r{observation(), -cost, false, false};
  finish_step(r);
  return r;
}

PointMass::PointMass() : PointMass(Params{}) {}

PointMass::PointMass(Params params, int max_episode_steps) : p_(params) {
  spec_.name = "pointmass";
  spec_.state_dim = 4;
  spec_.action_dim = 2;
  spec_.action_low = Vector::Constant(2, -1.0);
  spec_.action_high = Vector::Constant(2, 1.0);
  spec_.obs_low = Vector(4);
  spec_.obs_low << -p_.bound, -p_.bound, -p_.max_speed, -p_.max_speed;
  spec_.obs_high = -spec_.obs_low;
  spec_.max_episode_steps = max_episode_steps;
  spec_.validate();
}

Vector PointMass::observation() const {
  Vector o(4);
  o << pos_.x(), pos_.y(), vel_.x(), vel_.y();
  return o;
}

void PointMass::set_state(const Eigen::Vector2d& pos, const Eigen::Vector2d& vel) {
  pos_ = pos;
  vel_ = vel;
  elapsed_ = 0;
}

Vector PointMass::reset(Rng& rng) {
  // Start outside the goal region.
  do {
    pos_ = Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  } while ((pos_ - p_.goal).norm() < p_.goal_radius);
  vel_.setZero();
  elapsed_ = 0;
  return observation();
}

StepResult PointMass::step(const Vector& action) {
  if (action.size() != 2) throw std::invalid_argument("pointmass: action must have two entries");
  const Eigen::Vector2d a = action.cwiseMax(-1.0).cwiseMin(1.0);
  pos_ = (pos_ + vel_ * p_.dt).cwiseMax(-p_.bound).cwiseMin(p_.bound);
  vel_ = (vel_ + a * p_.dt).cwiseMax(-p_.max_speed).cwiseMin(p_.max_speed);
  const double dist2 = (pos_ - p_.goal).squaredNorm();
  StepResult r{observation(), -dist2 - p_.action_cost * a.squaredNorm(),
               std::sqrt(dist2) <= p_.goal_radius, false};
  finish_step(r);
  return r;
}

std::unique_ptr<Env> make_env(std::string_view name, int max_episode_steps) {
  if (name == "pendulum") return std::make_unique<Pendulum>(Pendulum::Params{}, max_episode_steps);
  if (name == "pointmass") return std::make_unique<PointMass>(PointMass::Params{}, max_episode_steps);
  throw std::invalid_argument("unknown env '" + std::string(name) + "'");
}

Vector normalize_obs(const Vector& s, const EnvSpec& spec) {
  return normalize_to_unit(s, spec.obs_low, spec.obs_high).col(0);
}

Vector scale_action(const Vector& unit_action, const EnvSpec& spec) {
  const Vector a = unit_action.cwiseMax(-1.0).cwiseMin(1.0);
  return spec.action_low.array() + (a.array() + 1.0) * 0.5 * (spec.action_high - spec.action_low).array();
}

}  // namespace pdsan
