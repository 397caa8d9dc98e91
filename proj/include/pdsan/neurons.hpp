#pragma once

#include "pdsan/parameters.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace pdsan {

enum class NeuronType { lif, dn };

NeuronType parse_neuron_type(std::string_view tag);
std::string_view to_string(NeuronType type);

/// Second-order dynamic neuron. Defaults are the clustered parameters
/// shipped in data/theta_star.json.
struct DnParams {
  double theta_a = -0.172;
  double theta_b = 0.529;
  double theta_c = 0.021;
  double theta_d = 0.132;
  double v_th = 0.5;
  double d_c = 0.5;
  /// Symmetric bound applied to v after each update; off when empty.
  std::optional<double> v_clamp;

  void validate() const;
};

struct LifParams {
  double d_c = 0.5;
  double v_f = 0.75;
  double v_th = 0.5;

  void validate() const;
};

/// Per-neuron dynamic parameters (length = layer width).
struct DnTheta {
  Eigen::ArrayXd a, b, c, d;

  static DnTheta shared(const DnParams& p, Eigen::Index width);
  Eigen::Index width() const { return a.size(); }
};

/// State of one layer for a batch: every matrix is width x batch.
struct LayerState {
  Matrix c;  // synaptic current
  Matrix v;  // membrane potential
  Matrix u;  // recovery (DN only; stays zero for LIF)
  Matrix o;  // spikes emitted at the previous step

  static LayerState zeros(Eigen::Index width, Eigen::Index batch);
  Eigen::Index width() const { return v.rows(); }
};

/// Intermediate values of a DN step that the backward pass needs:
/// potential and recovery after the spike reset, before the update.
struct DnStepScratch {
  Matrix v_reset;
  Matrix u_reset;
};

/// One Algorithm-1 update. The returned state's `o` holds the new spikes.
LayerState dn_step(const LayerState& state, const Matrix& drive, const DnParams& params);

/// In-place variant with per-neuron parameters used by the actor.
void dn_step_inplace(LayerState& state, const Eigen::Ref<const Matrix>& drive, const DnTheta& theta,
                     double d_c, double v_th, std::optional<double> v_clamp,
                     DnStepScratch* scratch = nullptr);

/// Raw column-major buffers (theta width x cols) for one DN step. Outputs may
/// alias the matching `_prev` inputs.
struct DnKernelArgs {
  Eigen::Index cols;
  const double* c_prev;
  const double* v_prev;
  const double* u_prev;
  const double* o_prev;
  const double* drive;
  double* c;
  double* v;
  double* u;
  double* o;
  double* v_reset;
  double* u_reset;
};

void dn_kernel(const DnKernelArgs& args, const DnTheta& theta, double d_c, double v_th,
               std::optional<double> v_clamp);
void lif_kernel(Eigen::Index count, const double* c_prev, const double* v_prev, const double* o_prev,
                const double* drive, const LifParams& p, double* c, double* v, double* o);

LayerState lif_step(const LayerState& state, const Matrix& drive, const LifParams& params);
void lif_step_inplace(LayerState& state, const Eigen::Ref<const Matrix>& drive, const LifParams& params);

/// Rectangular pseudo-derivative of the spike: 1 where |v - v_th| < w.
double surrogate_grad(double v, double v_th, double window);
Matrix surrogate_grad(const Matrix& v, double v_th, double window);

enum class Stability { stable, unstable };

struct Equilibrium {
  double v;
  Stability stability;
};

/// Real roots of -V^N + I = 0 with stability from the sign of -N V^(N-1).
/// Only N in {1, 2}. A degenerate root (N=2, I=0) is reported unstable
/// because trajectories starting below it escape.
std::vector<Equilibrium> equilibrium_points(int order, double input);

/// Explicit Euler trajectory of tau dV/dt = -V^N + I; returns steps+1
/// samples starting at v0.
std::vector<double> integrate_membrane(int order, double input, double v0, double tau, double dt,
                                       int steps);

}  // namespace pdsan
