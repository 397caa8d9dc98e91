#include "pdsan/actor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pdsan {

int SpikingActorConfig::input_size() const {
  return uses_population(coding) ? state_dim * pop_size : state_dim;
}

std::vector<int> SpikingActorConfig::layer_widths() const {
  std::vector<int> widths = hidden;
  widths.push_back(action_dim * out_pop_size);
  return widths;
}

void SpikingActorConfig::validate() const {
  if (state_dim < 1 || action_dim < 1) throw std::invalid_argument("actor: dimensions must be positive");
  if (pop_size < 1 || out_pop_size < 1) throw std::invalid_argument("actor: population sizes must be positive");
  if (time_window < 1) throw std::invalid_argument("actor: time_window must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("actor: hidden widths must be positive");
  }
  if (!(surrogate_window > 0.0)) throw std::invalid_argument("actor: surrogate_window must be positive");
  if (obs_low.size() != state_dim || obs_high.size() != state_dim) {
    throw std::invalid_argument("actor: observation bounds must have state_dim entries");
  }
  if (learnable_theta && neuron != NeuronType::dn) {
    throw std::invalid_argument("actor: learnable thetas require dn neurons");
  }
  dn.validate();
  lif.validate();
}

Matrix decode(const Matrix& spike_counts, int time_window, const Matrix& decoder_w,
              const Matrix& decoder_b, Matrix* pre_activation) {
  const Eigen::Index m = decoder_w.rows();
  const Eigen::Index pop = decoder_w.cols();
  if (spike_counts.rows() != m * pop) throw std::invalid_argument("decode: spike count size mismatch");
  const Matrix fr = spike_counts / static_cast<double>(time_window);
  Matrix pre(m, spike_counts.cols());
  for (Eigen::Index j = 0; j < m; ++j) {
    pre.row(j) = decoder_w.row(j) * fr.middleRows(j * pop, pop);
    pre.row(j).array() += decoder_b(j, 0);
  }
  Matrix actions = pre.array().tanh().matrix();
  if (pre_activation) *pre_activation = std::move(pre);
  return actions;
}

SpikingActor::SpikingActor(SpikingActorConfig config, Rng& init_rng) : config_(std::move(config)) {
  config_.validate();
  if (uses_population(config_.coding)) {
    auto enc = PopulationEncoderParams::tiled(config_.obs_low, config_.obs_high, config_.pop_size);
    params_.add("encoder.mu", std::move(enc.mu));
    params_.add("encoder.sigma", std::move(enc.sigma));
  }
  int in = config_.input_size();
  const auto widths = config_.layer_widths();
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const int out = widths[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = init_rng.uniform(-bound, bound);
    }
    const std::string prefix = "layer" + std::to_string(l);
    params_.add(prefix + ".W", std::move(w));
    params_.add(prefix + ".b", Matrix::Zero(out, 1));
    if (config_.learnable_theta) {
      Matrix theta(out, 4);
      for (Eigen::Index j = 0; j < 4; ++j) {
        for (Eigen::Index i = 0; i < out; ++i) theta(i, j) = init_rng.uniform();
      }
      params_.add(prefix + ".theta", std::move(theta));
    }
    in = out;
  }
  const int m = config_.action_dim;
  const int pop = config_.out_pop_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(pop));
  Matrix dw(m, pop);
  for (Eigen::Index j = 0; j < dw.cols(); ++j) {
    for (Eigen::Index i = 0; i < dw.rows(); ++i) dw(i, j) = init_rng.uniform(-bound, bound);
  }
  params_.add("decoder.W", std::move(dw));
  params_.add("decoder.b", Matrix::Zero(m, 1));
  index_tensors();
}

SpikingActor::SpikingActor(SpikingActorConfig config, ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  index_tensors();
}

void SpikingActor::index_tensors() {
  auto require = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto i = params_.find(name);
    if (!i) throw std::invalid_argument("actor parameters lack tensor " + name);
    const Matrix& t = params_[*i];
    if (t.rows() != rows || t.cols() != cols) {
      throw std::invalid_argument("actor tensor " + name + " has shape " + std::to_string(t.rows()) +
                                  "x" + std::to_string(t.cols()) + ", expected " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
    }
    return *i;
  };
  mu_.reset();
  sigma_.reset();
  w_.clear();
  b_.clear();
  theta_.clear();
  std::size_t expected = 0;
  if (uses_population(config_.coding)) {
    mu_ = require("encoder.mu", config_.state_dim, config_.pop_size);
    sigma_ = require("encoder.sigma", config_.state_dim, config_.pop_size);
    expected += 2;
  }
  int in = config_.input_size();
  const auto widths = config_.layer_widths();
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    w_.push_back(require(prefix + ".W", widths[l], in));
    b_.push_back(require(prefix + ".b", widths[l], 1));
    expected += 2;
    if (config_.learnable_theta) {
      theta_.push_back(require(prefix + ".theta", widths[l], 4));
      ++expected;
    }
    in = widths[l];
  }
  dw_ = require("decoder.W", config_.action_dim, config_.out_pop_size);
  db_ = require("decoder.b", config_.action_dim, 1);
  expected += 2;
  if (params_.size() != expected) throw std::invalid_argument("actor parameters contain unexpected tensors");
}

std::optional<std::size_t> SpikingActor::theta_index(int layer) const {
  if (theta_.empty()) return std::nullopt;
  return theta_.at(layer);
}

DnTheta SpikingActor::layer_theta(int layer) const {
  if (theta_.empty()) return DnTheta::shared(config_.dn, params_[w_.at(layer)].rows());
  const Matrix& t = params_[theta_.at(layer)];
  return {t.col(0).array(), t.col(1).array(), t.col(2).array(), t.col(3).array()};
}

void SpikingActor::enforce_constraints() {
  if (sigma_) clamp_sigma(params_[*sigma_]);
  const double lim = config_.theta_clamp;
  for (std::size_t idx : theta_) params_[idx] = params_[idx].cwiseMax(-lim).cwiseMin(lim);
}

Matrix SpikingActor::build_inputs(const Matrix& stimulation, Rng* coding_rng) const {
  const int T = config_.time_window;
  const Eigen::Index B = stimulation.cols();
  Matrix inputs(stimulation.rows(), T * B);
  if (is_analog(config_.coding)) {
    for (int t = 0; t < T; ++t) inputs.middleCols(t * B, B) = stimulation;
    return inputs;
  }
  const RateVariant variant = rate_variant(config_.coding);
  if (variant != RateVariant::det && !coding_rng) {
    throw std::invalid_argument("stochastic input coding requires a coding rng");
  }
  for (Eigen::Index b = 0; b < B; ++b) {
    // Clamp guards the (0, 1] stimulation against rounding just above 1.
    const Vector s = stimulation.col(b).cwiseMax(0.0).cwiseMin(1.0);
    SpikeTrain train;
    switch (variant) {
      case RateVariant::uni: train = encode_uniform(s, T, *coding_rng); break;
      case RateVariant::poi: train = encode_poisson(s, T, *coding_rng); break;
      case RateVariant::det: train = encode_deterministic(s, T, config_.det_delta); break;
    }
    for (int t = 0; t < T; ++t) inputs.col(t * B + b) = train.bits.col(t);
  }
  return inputs;
}

ForwardTrace SpikingActor::forward(const Matrix& states, Rng* coding_rng) const {
  if (states.rows() != config_.state_dim) {
    throw std::invalid_argument("actor: state has " + std::to_string(states.rows()) +
                                " dims, encoder expects " + std::to_string(config_.state_dim));
  }
  const int T = config_.time_window;
  const auto B = static_cast<int>(states.cols());
  ForwardTrace tr;
  tr.batch = B;
  tr.time_window = T;
  tr.states = states;
  if (uses_population(config_.coding)) {
    tr.stimulation = encode_population_batch(states, params_[*mu_], params_[*sigma_]);
  } else {
    tr.stimulation = normalize_to_unit(states, config_.obs_low, config_.obs_high);
  }
  tr.inputs = build_inputs(tr.stimulation, coding_rng);

  const int L = layer_count();
  const bool dn = config_.neuron == NeuronType::dn;
  tr.c.resize(L);
  tr.v.resize(L);
  tr.o.resize(L);
  if (dn) {
    tr.v_reset.resize(L);
    tr.u_reset.resize(L);
  }
  for (int l = 0; l < L; ++l) {
    const Matrix& w = params_[w_[l]];
    const Matrix& bias = params_[b_[l]];
    const Eigen::Index width = w.rows();
    const Eigen::Index cols = static_cast<Eigen::Index>(T) * B;
    Matrix drive(width, cols);
    if (l == 0 && is_analog(config_.coding)) {
      // Constant input: one product serves every timestep.
      Matrix once = w * tr.stimulation;
      once.colwise() += bias.col(0);
      for (int t = 0; t < T; ++t) drive.middleCols(t * B, B) = once;
    } else {
      const Matrix& x = l == 0 ? tr.inputs : tr.o[l - 1];
      drive.noalias() = w * x;
      drive.colwise() += bias.col(0);
    }
    tr.c[l].resize(width, cols);
    tr.v[l].resize(width, cols);
    tr.o[l].resize(width, cols);
    const Matrix zeros = Matrix::Zero(width, B);
    const Eigen::Index block = width * B;
    if (dn) {
      tr.v_reset[l].resize(width, cols);
      tr.u_reset[l].resize(width, cols);
      Matrix u = Matrix::Zero(width, B);
      const DnTheta theta = layer_theta(l);
      for (int t = 0; t < T; ++t) {
        const Eigen::Index cur = t * block;
        const Eigen::Index prev = (t - 1) * block;
        DnKernelArgs a{B,
                       t ? tr.c[l].data() + prev : zeros.data(),
                       t ? tr.v[l].data() + prev : zeros.data(),
                       u.data(),
                       t ? tr.o[l].data() + prev : zeros.data(),
                       drive.data() + cur,
                       tr.c[l].data() + cur,
                       tr.v[l].data() + cur,
                       u.data(),
                       tr.o[l].data() + cur,
                       tr.v_reset[l].data() + cur,
                       tr.u_reset[l].data() + cur};
        dn_kernel(a, theta, config_.dn.d_c, config_.dn.v_th, config_.dn.v_clamp);
      }
    } else {
      for (int t = 0; t < T; ++t) {
        const Eigen::Index cur = t * block;
        const Eigen::Index prev = (t - 1) * block;
        lif_kernel(block, t ? tr.c[l].data() + prev : zeros.data(), t ? tr.v[l].data() + prev : zeros.data(),
                   t ? tr.o[l].data() + prev : zeros.data(), drive.data() + cur, config_.lif,
                   tr.c[l].data() + cur, tr.v[l].data() + cur, tr.o[l].data() + cur);
      }
    }
  }
  const Matrix& out = tr.o[L - 1];
  tr.spike_counts = Matrix::Zero(out.rows(), B);
  for (int t = 0; t < T; ++t) tr.spike_counts += out.middleCols(t * B, B);
  tr.firing_rates = tr.spike_counts / static_cast<double>(T);
  tr.actions = decode(tr.spike_counts, T, params_[dw_], params_[db_], &tr.pre_activation);
  return tr;
}

Matrix SpikingActor::act(const Matrix& states, Rng* coding_rng) const {
  return forward(states, coding_rng).actions;
}

ParameterSet SpikingActor::backward(const ForwardTrace& tr, const Matrix& grad_actions) const {
  const int T = config_.time_window;
  const int B = tr.batch;
  const int L = layer_count();
  if (tr.time_window != T || static_cast<int>(tr.o.size()) != L || grad_actions.rows() != config_.action_dim ||
      grad_actions.cols() != B) {
    throw std::invalid_argument("actor backward: trace does not match parameters");
  }
  ParameterSet grads = params_.zeros_like();
  const Matrix& dw = params_[dw_];
  const Eigen::Index m = dw.rows();
  const Eigen::Index pop = dw.cols();

  // Decoder.
  const Matrix g_pre = (grad_actions.array() * (1.0 - tr.actions.array().square())).matrix();
  Matrix g_fr(m * pop, B);
  for (Eigen::Index j = 0; j < m; ++j) {
    grads[dw_].row(j) = g_pre.row(j) * tr.firing_rates.middleRows(j * pop, pop).transpose();
    grads[db_](j, 0) = g_pre.row(j).sum();
    g_fr.middleRows(j * pop, pop) = dw.row(j).transpose() * g_pre.row(j);
  }
  const Matrix g_sc = g_fr / static_cast<double>(T);

  // Output spikes receive the same seed at every timestep.
  Matrix g_o(m * pop, static_cast<Eigen::Index>(T) * B);
  for (int t = 0; t < T; ++t) g_o.middleCols(t * B, B) = g_sc;

  const bool dn = config_.neuron == NeuronType::dn;
  const bool recovery = dn && config_.recovery_grad();
  const double window = config_.surrogate_window;
  const double d_c = dn ? config_.dn.d_c : config_.lif.d_c;
  const double v_th = dn ? config_.dn.v_th : config_.lif.v_th;
  const std::optional<double> clamp = config_.dn.v_clamp;

  Matrix g_input;
  for (int l = L - 1; l >= 0; --l) {
    const Matrix& w = params_[w_[l]];
    const Eigen::Index width = w.rows();
    const DnTheta theta = dn ? layer_theta(l) : DnTheta{};
    Matrix g_c_all(width, static_cast<Eigen::Index>(T) * B);
    Eigen::ArrayXXd carry_v = Eigen::ArrayXXd::Zero(width, B);
    Eigen::ArrayXXd carry_u = Eigen::ArrayXXd::Zero(width, B);
    Eigen::ArrayXXd carry_c = Eigen::ArrayXXd::Zero(width, B);
    Eigen::ArrayXd g_ta, g_tb, g_tc, g_td;
    if (recovery && config_.learnable_theta) {
      g_ta = g_tb = g_tc = g_td = Eigen::ArrayXd::Zero(width);
    }
    for (int t = T - 1; t >= 0; --t) {
      const auto v_t = tr.v[l].middleCols(t * B, B).array();
      const auto o_t = tr.o[l].middleCols(t * B, B).array();
      const auto go = g_o.middleCols(t * B, B).array();
      const Eigen::ArrayXXd z = ((v_t - v_th).abs() < window).cast<double>();
      Eigen::ArrayXXd g_v = z * go + (1.0 - o_t) * carry_v;
      if (dn && clamp) g_v *= (v_t.abs() < *clamp).cast<double>();
      const Eigen::ArrayXXd g_c = g_v + d_c * carry_c;
      carry_c = g_c;
      g_c_all.middleCols(t * B, B) = g_c.matrix();
      if (!dn) {
        carry_v = config_.lif.v_f * g_v;
        continue;
      }
      const auto vr = tr.v_reset[l].middleCols(t * B, B).array();
      if (!recovery) {
        carry_v = 2.0 * vr * g_v;
        continue;
      }
      const auto ur = tr.u_reset[l].middleCols(t * B, B).array();
      const Eigen::ArrayXXd& g_u = carry_u;
      const Eigen::ArrayXXd g_vr = 2.0 * vr * g_v + g_u.colwise() * (theta.a * theta.b);
      const Eigen::ArrayXXd g_ur = -g_v + g_u.colwise() * (1.0 - theta.a);
      if (config_.learnable_theta) {
        g_ta += (g_u * (vr.colwise() * theta.b - ur)).rowwise().sum();
        g_tb += (g_u * (vr.colwise() * theta.a)).rowwise().sum();
        if (t > 0) {
          const auto o_prev = tr.o[l].middleCols((t - 1) * B, B).array();
          g_tc += (g_vr * o_prev).rowwise().sum();
          g_td += (g_ur * o_prev).rowwise().sum();
        }
      }
      carry_v = g_vr;
      carry_u = g_ur;
    }
    if (config_.learnable_theta) {
      Matrix& gt = grads[theta_[l]];
      gt.col(0) = g_ta.matrix();
      gt.col(1) = g_tb.matrix();
      gt.col(2) = g_tc.matrix();
      gt.col(3) = g_td.matrix();
    }
    const Matrix& x = l == 0 ? tr.inputs : tr.o[l - 1];
    grads[w_[l]].noalias() = g_c_all * x.transpose();
    grads[b_[l]].col(0) = g_c_all.rowwise().sum();
    if (l > 0) {
      g_o.noalias() = w.transpose() * g_c_all;
    } else if (mu_) {
      Matrix g_sum = g_c_all.middleCols(0, B);
      for (int t = 1; t < T; ++t) g_sum += g_c_all.middleCols(t * B, B);
      g_input = w.transpose() * g_sum;
    }
  }

  if (mu_) {
    // For the rate variants the input spikes are treated as straight-through
    // estimates of the stimulation.
    accumulate_population_grads(tr.states, params_[*mu_], params_[*sigma_], tr.stimulation, g_input,
                                grads[*mu_], grads[*sigma_]);
  }
  return grads;
}

}  // namespace pdsan
