#pragma once

#include "pdsan/parameters.hpp"
#include "pdsan/rng.hpp"

#include <string_view>

namespace pdsan {

enum class InputCoding { uni, poi, det, pop, pop_uni, pop_poi, pop_det };
enum class RateVariant { uni, poi, det };

InputCoding parse_input_coding(std::string_view tag);
std::string_view to_string(InputCoding coding);
RateVariant parse_rate_variant(std::string_view tag);

/// True for codings that run states through Gaussian receptive fields.
bool uses_population(InputCoding coding);
/// True for codings whose input is an analog pass-through (no input spikes).
inline bool is_analog(InputCoding coding) { return coding == InputCoding::pop; }
/// Rate variant applied after (or instead of) the population stage.
RateVariant rate_variant(InputCoding coding);

inline constexpr double kDefaultDetDelta = 1e-3;
inline constexpr double kSigmaFloor = 1e-3;

/// Binary input train, one row per input channel and one column per timestep.
struct SpikeTrain {
  Matrix bits;
  int channels() const { return static_cast<int>(bits.rows()); }
  int time_window() const { return static_cast<int>(bits.cols()); }
};

// Rate codings. `s` must be normalized to [0, 1].
SpikeTrain encode_uniform(const Vector& s, int time_window, Rng& rng);
SpikeTrain encode_poisson(const Vector& s, int time_window, Rng& rng);
SpikeTrain encode_deterministic(const Vector& s, int time_window, double delta = kDefaultDetDelta);

/// Gaussian receptive fields: row i holds the p neurons encoding state dim i.
struct PopulationEncoderParams {
  Matrix mu;
  Matrix sigma;

  int state_dim() const { return static_cast<int>(mu.rows()); }
  int pop_size() const { return static_cast<int>(mu.cols()); }

  /// Means evenly spaced over [low_i, high_i], widths (high_i - low_i) / p.
  static PopulationEncoderParams tiled(const Vector& low, const Vector& high, int pop_size);
};

/// A_E[i][j] = exp(-(s_i - mu_ij)^2 / (2 sigma_ij^2)), shape n x p.
Matrix encode_population(const Vector& s, const Matrix& mu, const Matrix& sigma);
inline Matrix encode_population(const Vector& s, const PopulationEncoderParams& p) {
  return encode_population(s, p.mu, p.sigma);
}

/// Batched form: states n x B -> stimulation (n*p) x B, channel index i*p + j.
Matrix encode_population_batch(const Matrix& states, const Matrix& mu, const Matrix& sigma);

/// Applies a rate coding element-wise to the row-major flattened n*p
/// stimulation values. `rng` is required for uni/poi.
SpikeTrain encode_population_rate(const Matrix& stimulation, RateVariant variant, int time_window,
                                  Rng* rng, double delta = kDefaultDetDelta);

struct PopulationGrads {
  Matrix mu;
  Matrix sigma;
};

/// Receptive-field gradients given upstream = dJ/dA_E (n x p), already
/// summed over the time window.
PopulationGrads grad_population(const Vector& s, const Matrix& mu, const Matrix& sigma,
                                const Matrix& upstream);
inline PopulationGrads grad_population(const Vector& s, const PopulationEncoderParams& p,
                                       const Matrix& upstream) {
  return grad_population(s, p.mu, p.sigma, upstream);
}

/// Batched form: accumulates the batch sum of receptive-field gradients.
/// `stimulation` is the forward output for the same states; `upstream` is
/// (n*p) x B.
void accumulate_population_grads(const Matrix& states, const Matrix& mu, const Matrix& sigma,
                                 const Matrix& stimulation, const Matrix& upstream,
                                 Matrix& grad_mu, Matrix& grad_sigma);

void clamp_sigma(Matrix& sigma, double floor = kSigmaFloor);

/// Per-dimension affine map of each column from [low, high] onto [0, 1], clipped.
Matrix normalize_to_unit(const Matrix& states, const Vector& low, const Vector& high);

}  // namespace pdsan
