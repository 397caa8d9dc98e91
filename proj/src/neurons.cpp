#include "pdsan/neurons.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pdsan {

NeuronType parse_neuron_type(std::string_view tag) {
  if (tag == "lif") return NeuronType::lif;
  if (tag == "dn") return NeuronType::dn;
  throw std::invalid_argument("unknown neuron type '" + std::string(tag) + "'");
}

std::string_view to_string(NeuronType type) {
  return type == NeuronType::lif ? "lif" : "dn";
}

void DnParams::validate() const {
  if (!(v_th > 0.0)) throw std::invalid_argument("dn: v_th must be positive");
  if (!(d_c >= 0.0 && d_c <= 1.0)) throw std::invalid_argument("dn: d_c must lie in [0, 1]");
  if (v_clamp && !(*v_clamp > 0.0)) throw std::invalid_argument("dn: v_clamp must be positive");
  for (double x : {theta_a, theta_b, theta_c, theta_d}) {
    if (!std::isfinite(x)) throw std::invalid_argument("dn: theta must be finite");
  }
}

void LifParams::validate() const {
  if (!(v_th > 0.0)) throw std::invalid_argument("lif: v_th must be positive");
  if (!(d_c >= 0.0 && d_c <= 1.0)) throw std::invalid_argument("lif: d_c must lie in [0, 1]");
  if (!(v_f >= 0.0 && v_f <= 1.0)) throw std::invalid_argument("lif: v_f must lie in [0, 1]");
}

DnTheta DnTheta::shared(const DnParams& p, Eigen::Index width) {
  return {Eigen::ArrayXd::Constant(width, p.theta_a), Eigen::ArrayXd::Constant(width, p.theta_b),
          Eigen::ArrayXd::Constant(width, p.theta_c), Eigen::ArrayXd::Constant(width, p.theta_d)};
}

LayerState LayerState::zeros(Eigen::Index width, Eigen::Index batch) {
  return {Matrix::Zero(width, batch), Matrix::Zero(width, batch), Matrix::Zero(width, batch),
          Matrix::Zero(width, batch)};
}

void dn_kernel(const DnKernelArgs& a, const DnTheta& theta, double d_c, double v_th,
               std::optional<double> v_clamp) {
  const double lim = v_clamp.value_or(std::numeric_limits<double>::infinity());
  const Eigen::Index rows = theta.width();
  const double* ta = theta.a.data();
  const double* tb = theta.b.data();
  const double* tc = theta.c.data();
  const double* td = theta.d.data();
  for (Eigen::Index j = 0; j < a.cols; ++j) {
    const Eigen::Index off = j * rows;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index k = off + i;
      const double c = d_c * a.c_prev[k] + a.drive[k];
      const double o = a.o_prev[k];
      // Reset driven by the previous step's spikes.
      const double vr = a.v_prev[k] * (1.0 - o) + o * tc[i];
      const double ur = a.u_prev[k] + o * td[i];
      const double v_delta = vr * vr - vr - ur + c;
      const double u_delta = (vr * tb[i] - ur) * ta[i];
      const double v = std::min(std::max(vr + v_delta, -lim), lim);
      a.v_reset[k] = vr;
      a.u_reset[k] = ur;
      a.c[k] = c;
      a.v[k] = v;
      a.u[k] = ur + u_delta;
      a.o[k] = v > v_th ? 1.0 : 0.0;
    }
  }
}

void dn_step_inplace(LayerState& s, const Eigen::Ref<const Matrix>& drive, const DnTheta& theta,
                     double d_c, double v_th, std::optional<double> v_clamp,
                     DnStepScratch* scratch) {
  DnStepScratch local;
  DnStepScratch& sc = scratch ? *scratch : local;
  sc.v_reset.resize(s.v.rows(), s.v.cols());
  sc.u_reset.resize(s.v.rows(), s.v.cols());
  const Matrix in = drive;
  DnKernelArgs a{s.v.cols(), s.c.data(), s.v.data(), s.u.data(), s.o.data(), in.data(),
                 s.c.data(), s.v.data(), s.u.data(), s.o.data(), sc.v_reset.data(), sc.u_reset.data()};
  dn_kernel(a, theta, d_c, v_th, v_clamp);
}

LayerState dn_step(const LayerState& state, const Matrix& drive, const DnParams& params) {
  if (drive.rows() != state.v.rows() || drive.cols() != state.v.cols()) {
    throw std::invalid_argument("dn_step: drive shape does not match layer state");
  }
  LayerState next = state;
  dn_step_inplace(next, drive, DnTheta::shared(params, state.width()), params.d_c, params.v_th,
                  params.v_clamp);
  return next;
}

void lif_kernel(Eigen::Index count, const double* c_prev, const double* v_prev, const double* o_prev,
                const double* drive, const LifParams& p, double* c, double* v, double* o) {
  for (Eigen::Index k = 0; k < count; ++k) {
    const double ck = p.d_c * c_prev[k] + drive[k];
    const double vk = p.v_f * v_prev[k] * (1.0 - o_prev[k]) + ck;
    c[k] = ck;
    v[k] = vk;
    o[k] = vk > p.v_th ? 1.0 : 0.0;
  }
}

void lif_step_inplace(LayerState& s, const Eigen::Ref<const Matrix>& drive, const LifParams& p) {
  const Matrix in = drive;
  lif_kernel(s.v.size(), s.c.data(), s.v.data(), s.o.data(), in.data(), p, s.c.data(), s.v.data(), s.o.data());
}

LayerState lif_step(const LayerState& state, const Matrix& drive, const LifParams& params) {
  if (drive.rows() != state.v.rows() || drive.cols() != state.v.cols()) {
    throw std::invalid_argument("lif_step: drive shape does not match layer state");
  }
  LayerState next = state;
  lif_step_inplace(next, drive, params);
  return next;
}

double surrogate_grad(double v, double v_th, double window) {
  return std::abs(v - v_th) < window ? 1.0 : 0.0;
}

Matrix surrogate_grad(const Matrix& v, double v_th, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("surrogate window must be positive");
  return ((v.array() - v_th).abs() < window).cast<double>().matrix();
}

std::vector<Equilibrium> equilibrium_points(int order, double input) {
  if (order == 1) return {{input, Stability::stable}};
  if (order != 2) throw std::invalid_argument("equilibrium_points: only orders 1 and 2 are supported");
  if (input < 0.0) return {};
  if (input == 0.0) return {{0.0, Stability::unstable}};
  const double r = std::sqrt(input);
  // f(V) = -V^2 + I, f'(V) = -2V.
  return {{r, Stability::stable}, {-r, Stability::unstable}};
}

std::vector<double> integrate_membrane(int order, double input, double v0, double tau, double dt,
                                       int steps) {
  if (order != 1 && order != 2) throw std::invalid_argument("integrate_membrane: order must be 1 or 2");
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_membrane: dt must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("integrate_membrane: tau must be positive");
  if (!(dt < tau / 10.0)) throw std::invalid_argument("integrate_membrane: dt must be below tau/10");
  if (steps < 0) throw std::invalid_argument("integrate_membrane: steps must be >= 0");
  std::vector<double> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  double v = v0;
  traj.push_back(v);
  for (int k = 0; k < steps; ++k) {
    const double field = (order == 1 ? -v : -v * v) + input;
    v += dt / tau * field;
    traj.push_back(v);
  }
  return traj;
}

}  // namespace pdsan
