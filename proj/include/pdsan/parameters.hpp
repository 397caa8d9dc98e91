#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdsan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Ordered collection of named dense tensors. Networks own one of these for
/// their learnable state; gradients, optimizer moments and target copies
/// are ParameterSets of identical layout.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  std::size_t add(std::string name, Matrix value);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  Matrix& operator[](std::size_t i) { return entries_[i].value; }
  const Matrix& operator[](std::size_t i) const { return entries_[i].value; }
  const std::string& name(std::size_t i) const { return entries_[i].name; }

  std::optional<std::size_t> find(std::string_view name) const;
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;

  ParameterSet zeros_like() const;
  bool same_layout(const ParameterSet& other) const;
  void set_zero();
  void scale(double factor);
  void add_scaled(const ParameterSet& other, double factor);

  double squared_norm() const;
  bool all_finite() const;
  std::size_t scalar_count() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<Entry> entries_;
};

/// target <- eta * online + (1 - eta) * target, element-wise.
/// Throws std::invalid_argument on layout mismatch or eta outside [0, 1].
void soft_update(ParameterSet& target, const ParameterSet& online, double eta);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const ParameterSet& layout, AdamConfig config);

  /// Throws std::runtime_error (leaving params and moments untouched) if any
  /// gradient entry is non-finite.
  void step(ParameterSet& params, const ParameterSet& grads);

  void set_learning_rate(double lr) { config_.lr = lr; }
  /// Overrides the learning rate of a single tensor.
  void set_tensor_learning_rate(std::size_t index, double lr);

  const AdamConfig& config() const { return config_; }
  long long steps() const { return steps_; }

  // Exposed for checkpointing.
  ParameterSet& first_moment() { return m_; }
  ParameterSet& second_moment() { return v_; }
  const ParameterSet& first_moment() const { return m_; }
  const ParameterSet& second_moment() const { return v_; }
  void set_steps(long long steps) { steps_ = steps; }

 private:
  AdamConfig config_{};
  ParameterSet m_;
  ParameterSet v_;
  std::vector<std::optional<double>> tensor_lr_;
  long long steps_ = 0;
};

}  // namespace pdsan
