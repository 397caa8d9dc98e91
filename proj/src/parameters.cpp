#include "pdsan/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace pdsan {

std::size_t ParameterSet::add(std::string name, Matrix value) {
  if (find(name)) throw std::invalid_argument("duplicate tensor name: " + name);
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

Matrix& ParameterSet::at(std::string_view name) {
  auto i = find(name);
  if (!i) throw std::out_of_range("no tensor named " + std::string(name));
  return entries_[*i].value;
}

const Matrix& ParameterSet::at(std::string_view name) const {
  auto i = find(name);
  if (!i) throw std::out_of_range("no tensor named " + std::string(name));
  return entries_[*i].value;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) {
    out.entries_.push_back({e.name, Matrix::Zero(e.value.rows(), e.value.cols())});
  }
  return out;
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) {
      return false;
    }
  }
  return true;
}

void ParameterSet::set_zero() {
  for (auto& e : entries_) e.value.setZero();
}

void ParameterSet::scale(double factor) {
  for (auto& e : entries_) e.value *= factor;
}

void ParameterSet::add_scaled(const ParameterSet& other, double factor) {
  if (!same_layout(other)) throw std::invalid_argument("add_scaled: layout mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i].value += factor * other.entries_[i].value;
  }
}

double ParameterSet::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value.squaredNorm();
  return s;
}

bool ParameterSet::all_finite() const {
  for (const auto& e : entries_) {
    if (!e.value.allFinite()) return false;
  }
  return true;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

void soft_update(ParameterSet& target, const ParameterSet& online, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("soft_update: eta must lie in [0, 1]");
  if (!target.same_layout(online)) throw std::invalid_argument("soft_update: layout mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (eta == 1.0) {
      target[i] = online[i];
    } else if (eta != 0.0) {
      target[i] = eta * online[i] + (1.0 - eta) * target[i];
    }
  }
}

Adam::Adam(const ParameterSet& layout, AdamConfig config)
    : config_(config), m_(layout.zeros_like()), v_(layout.zeros_like()), tensor_lr_(layout.size()) {}

void Adam::set_tensor_learning_rate(std::size_t index, double lr) {
  tensor_lr_.at(index) = lr;
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
  if (!params.same_layout(m_) || !grads.same_layout(m_)) {
    throw std::invalid_argument("Adam::step: layout mismatch");
  }
  if (!grads.all_finite()) throw std::runtime_error("Adam::step: non-finite gradient");

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double lr = tensor_lr_[i].value_or(config_.lr);
    auto g = grads[i].array();
    m_[i].array() = config_.beta1 * m_[i].array() + (1.0 - config_.beta1) * g;
    v_[i].array() = config_.beta2 * v_[i].array() + (1.0 - config_.beta2) * g.square();
    if (lr == 0.0) continue;
    params[i].array() -=
        lr * (m_[i].array() / bias1) / ((v_[i].array() / bias2).sqrt() + config_.eps);
  }
}

}  // namespace pdsan
