#include "pdsan/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pdsan {

Activation parse_activation(std::string_view tag) {
  if (tag == "relu") return Activation::relu;
  if (tag == "tanh") return Activation::tanh;
  if (tag == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + std::string(tag) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "?";
}

void MlpSpec::validate() const {
  if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least one layer");
  if (activations.size() + 1 != sizes.size()) {
    throw std::invalid_argument("mlp needs one activation per layer");
  }
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("mlp layer sizes must be positive");
  }
}

MlpSpec critic_spec(int state_dim, int action_dim, const std::vector<int>& hidden) {
  MlpSpec spec;
  spec.sizes.push_back(state_dim + action_dim);
  for (int h : hidden) {
    spec.sizes.push_back(h);
    spec.activations.push_back(Activation::relu);
  }
  spec.sizes.push_back(1);
  spec.activations.push_back(Activation::linear);
  return spec;
}

Mlp::Mlp(MlpSpec spec, Rng& init_rng) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t k = 0; k < spec_.activations.size(); ++k) {
    const int in = spec_.sizes[k];
    const int out = spec_.sizes[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = init_rng.uniform(-bound, bound);
    }
    params_.add("W" + std::to_string(k), std::move(w));
    params_.add("b" + std::to_string(k), Matrix::Zero(out, 1));
  }
}

namespace {

void activate(Activation a, Matrix& x) {
  switch (a) {
    case Activation::relu: x = x.cwiseMax(0.0); break;
    case Activation::tanh: x = x.array().tanh().matrix(); break;
    case Activation::linear: break;
  }
}

}  // namespace

Matrix Mlp::forward(const Matrix& x, MlpTrace* trace) const {
  if (x.rows() != spec_.input_size()) {
    throw std::invalid_argument("mlp input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(spec_.input_size()));
  }
  if (trace) {
    trace->inputs.clear();
    trace->pre_activations.clear();
  }
  Matrix h = x;
  for (std::size_t k = 0; k < layer_count(); ++k) {
    Matrix z = params_[2 * k] * h;
    z.colwise() += params_[2 * k + 1].col(0);
    if (trace) {
      trace->inputs.push_back(std::move(h));
      trace->pre_activations.push_back(z);
    }
    activate(spec_.activations[k], z);
    h = std::move(z);
  }
  if (trace) trace->output = h;
  return h;
}

void Mlp::backward(const MlpTrace& trace, const Matrix& grad_output, ParameterSet& grads,
                   Matrix* grad_input) const {
  if (trace.pre_activations.size() != layer_count()) {
    throw std::invalid_argument("mlp backward: trace does not match network");
  }
  Matrix g = grad_output;
  for (std::size_t kk = layer_count(); kk-- > 0;) {
    const Matrix& z = trace.pre_activations[kk];
    switch (spec_.activations[kk]) {
      case Activation::relu: g = (z.array() > 0.0).select(g, 0.0); break;
      case Activation::tanh: g = (g.array() * (1.0 - z.array().tanh().square())).matrix(); break;
      case Activation::linear: break;
    }
    grads[2 * kk].noalias() += g * trace.inputs[kk].transpose();
    grads[2 * kk + 1].col(0) += g.rowwise().sum();
    if (kk > 0 || grad_input) {
      Matrix next = params_[2 * kk].transpose() * g;
      g = std::move(next);
    }
  }
  if (grad_input) *grad_input = std::move(g);
}

Critic::Critic(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& init_rng)
    : state_dim_(state_dim), action_dim_(action_dim),
      net_(critic_spec(state_dim, action_dim, hidden), init_rng) {}

RowVector Critic::evaluate(const Matrix& states, const Matrix& actions, MlpTrace* trace) const {
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ || states.cols() != actions.cols()) {
    throw std::invalid_argument("critic: state/action shape mismatch");
  }
  Matrix x(state_dim_ + action_dim_, states.cols());
  x.topRows(state_dim_) = states;
  x.bottomRows(action_dim_) = actions;
  return net_.forward(x, trace).row(0);
}

}  // namespace pdsan
