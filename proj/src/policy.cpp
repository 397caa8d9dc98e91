#include "pdsan/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace pdsan {

Matrix SpikingPolicy::act(const Matrix& states, Rng* coding_rng) const {
  return actor_.act(states, coding_rng);
}

Matrix SpikingPolicy::forward_train(const Matrix& states, Rng* coding_rng) {
  trace_ = actor_.forward(states, coding_rng);
  return trace_.actions;
}

ParameterSet SpikingPolicy::backward_train(const Matrix& grad_actions) {
  if (trace_.batch == 0) throw std::logic_error("backward_train called before forward_train");
  return actor_.backward(trace_, grad_actions);
}

std::unique_ptr<Policy> SpikingPolicy::clone() const {
  return std::make_unique<SpikingPolicy>(actor_);
}

void MlpActorConfig::validate() const {
  if (state_dim < 1 || action_dim < 1) throw std::invalid_argument("mlp actor: dimensions must be positive");
  if (population) {
    if (pop_size < 1 || out_pop_size < 1) throw std::invalid_argument("mlp actor: population sizes must be positive");
    if (obs_low.size() != state_dim || obs_high.size() != state_dim) {
      throw std::invalid_argument("mlp actor: observation bounds must have state_dim entries");
    }
  }
}

namespace {

MlpSpec body_spec(const MlpActorConfig& c) {
  MlpSpec spec;
  spec.sizes.push_back(c.population ? c.state_dim * c.pop_size : c.state_dim);
  for (int h : c.hidden) {
    spec.sizes.push_back(h);
    spec.activations.push_back(Activation::relu);
  }
  spec.sizes.push_back(c.population ? c.action_dim * c.out_pop_size : c.action_dim);
  spec.activations.push_back(c.population ? Activation::linear : Activation::tanh);
  return spec;
}

}  // namespace

MlpPolicy::MlpPolicy(MlpActorConfig config, Rng& init_rng) : config_(std::move(config)) {
  config_.validate();
  body_ = Mlp(body_spec(config_), init_rng);
  if (config_.population) {
    auto enc = PopulationEncoderParams::tiled(config_.obs_low, config_.obs_high, config_.pop_size);
    body_.params().add("encoder.mu", std::move(enc.mu));
    body_.params().add("encoder.sigma", std::move(enc.sigma));
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.out_pop_size));
    Matrix dw(config_.action_dim, config_.out_pop_size);
    for (Eigen::Index j = 0; j < dw.cols(); ++j) {
      for (Eigen::Index i = 0; i < dw.rows(); ++i) dw(i, j) = init_rng.uniform(-bound, bound);
    }
    body_.params().add("decoder.W", std::move(dw));
    body_.params().add("decoder.b", Matrix::Zero(config_.action_dim, 1));
  }
  index_tensors();
}

MlpPolicy::MlpPolicy(MlpActorConfig config, const ParameterSet& params) : config_(std::move(config)) {
  config_.validate();
  Rng unused(0);
  MlpPolicy fresh(config_, unused);
  if (!fresh.params().same_layout(params)) throw std::invalid_argument("mlp actor: parameter layout mismatch");
  body_ = std::move(fresh.body_);
  body_.params() = params;
  index_tensors();
}

void MlpPolicy::index_tensors() {
  const ParameterSet& p = body_.params();
  mu_ = p.find("encoder.mu");
  sigma_ = p.find("encoder.sigma");
  dw_ = p.find("decoder.W");
  db_ = p.find("decoder.b");
}

Matrix MlpPolicy::run(const Matrix& states, Trace* trace) const {
  if (states.rows() != config_.state_dim) throw std::invalid_argument("mlp actor: state size mismatch");
  const ParameterSet& p = body_.params();
  Matrix stim;
  if (config_.population) stim = encode_population_batch(states, p[*mu_], p[*sigma_]);
  const Matrix& x = config_.population ? stim : states;
  MlpTrace* body_trace = trace ? &trace->body : nullptr;
  Matrix out = body_.forward(x, body_trace);
  Matrix actions;
  if (config_.population) {
    // Linear population outputs are read as firing rates by the decoder.
    actions = decode(out, 1, p[*dw_], p[*db_]);
  } else {
    actions = out;
  }
  if (trace) {
    trace->states = states;
    trace->stimulation = std::move(stim);
    trace->body_out = std::move(out);
    trace->actions = actions;
  }
  return actions;
}

Matrix MlpPolicy::act(const Matrix& states, Rng*) const { return run(states, nullptr); }

Matrix MlpPolicy::forward_train(const Matrix& states, Rng*) {
  return run(states, &trace_);
}

ParameterSet MlpPolicy::backward_train(const Matrix& grad_actions) {
  if (trace_.actions.size() == 0) throw std::logic_error("backward_train called before forward_train");
  ParameterSet grads = body_.params().zeros_like();
  Matrix g_body;
  if (config_.population) {
    const ParameterSet& p = body_.params();
    const Matrix& dw = p[*dw_];
    const Eigen::Index m = dw.rows();
    const Eigen::Index pop = dw.cols();
    const Matrix g_pre = (grad_actions.array() * (1.0 - trace_.actions.array().square())).matrix();
    g_body.resize(m * pop, grad_actions.cols());
    for (Eigen::Index j = 0; j < m; ++j) {
      grads[*dw_].row(j) = g_pre.row(j) * trace_.body_out.middleRows(j * pop, pop).transpose();
      grads[*db_](j, 0) = g_pre.row(j).sum();
      g_body.middleRows(j * pop, pop) = dw.row(j).transpose() * g_pre.row(j);
    }
  } else {
    g_body = grad_actions;
  }
  Matrix g_x;
  body_.backward(trace_.body, g_body, grads, config_.population ? &g_x : nullptr);
  if (config_.population) {
    const ParameterSet& p = body_.params();
    accumulate_population_grads(trace_.states, p[*mu_], p[*sigma_], trace_.stimulation, g_x, grads[*mu_],
                                grads[*sigma_]);
  }
  return grads;
}

void MlpPolicy::enforce_constraints() {
  if (sigma_) clamp_sigma(body_.params()[*sigma_]);
}

std::unique_ptr<Policy> MlpPolicy::clone() const { return std::make_unique<MlpPolicy>(*this); }

}  // namespace pdsan
