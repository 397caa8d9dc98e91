#include "pdsan/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pdsan {

InputCoding parse_input_coding(std::string_view tag) {
  if (tag == "uni") return InputCoding::uni;
  if (tag == "poi") return InputCoding::poi;
  if (tag == "det") return InputCoding::det;
  if (tag == "pop") return InputCoding::pop;
  if (tag == "pop-uni") return InputCoding::pop_uni;
  if (tag == "pop-poi") return InputCoding::pop_poi;
  if (tag == "pop-det") return InputCoding::pop_det;
  throw std::invalid_argument("unknown input coding '" + std::string(tag) + "'");
}

std::string_view to_string(InputCoding coding) {
  switch (coding) {
    case InputCoding::uni: return "uni";
    case InputCoding::poi: return "poi";
    case InputCoding::det: return "det";
    case InputCoding::pop: return "pop";
    case InputCoding::pop_uni: return "pop-uni";
    case InputCoding::pop_poi: return "pop-poi";
    case InputCoding::pop_det: return "pop-det";
  }
  return "?";
}

RateVariant parse_rate_variant(std::string_view tag) {
  if (tag == "uni") return RateVariant::uni;
  if (tag == "poi") return RateVariant::poi;
  if (tag == "det") return RateVariant::det;
  throw std::invalid_argument("unknown rate variant '" + std::string(tag) + "'");
}

bool uses_population(InputCoding coding) {
  switch (coding) {
    case InputCoding::pop:
    case InputCoding::pop_uni:
    case InputCoding::pop_poi:
    case InputCoding::pop_det:
      return true;
    default:
      return false;
  }
}

RateVariant rate_variant(InputCoding coding) {
  switch (coding) {
    case InputCoding::uni:
    case InputCoding::pop_uni:
      return RateVariant::uni;
    case InputCoding::poi:
    case InputCoding::pop_poi:
      return RateVariant::poi;
    case InputCoding::det:
    case InputCoding::pop_det:
      return RateVariant::det;
    case InputCoding::pop:
      break;
  }
  throw std::invalid_argument("pop coding has no rate stage");
}

namespace {

void check_normalized(const Vector& s, int time_window) {
  if (time_window < 1) throw std::invalid_argument("time window must be >= 1");
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0 && s[i] <= 1.0)) {
      throw std::invalid_argument("rate coding input " + std::to_string(i) + " = " +
                                  std::to_string(s[i]) + " lies outside [0, 1]");
    }
  }
}

Vector flatten_row_major(const Matrix& m) {
  Vector flat(m.size());
  const Eigen::Index cols = m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) flat[i * cols + j] = m(i, j);
  }
  return flat;
}

}  // namespace

SpikeTrain encode_uniform(const Vector& s, int time_window, Rng& rng) {
  check_normalized(s, time_window);
  SpikeTrain out{Matrix::Zero(s.size(), time_window)};
  for (int t = 0; t < time_window; ++t) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      out.bits(i, t) = s[i] > rng.uniform() ? 1.0 : 0.0;
    }
  }
  return out;
}

SpikeTrain encode_poisson(const Vector& s, int time_window, Rng& rng) {
  check_normalized(s, time_window);
  SpikeTrain out{Matrix::Zero(s.size(), time_window)};
  for (int t = 0; t < time_window; ++t) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      out.bits(i, t) = rng.bernoulli(s[i]) ? 1.0 : 0.0;
    }
  }
  return out;
}

SpikeTrain encode_deterministic(const Vector& s, int time_window, double delta) {
  check_normalized(s, time_window);
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double threshold = 1.0 - delta;
  SpikeTrain out{Matrix::Zero(s.size(), time_window)};
  Vector v = Vector::Zero(s.size());
  for (int t = 0; t < time_window; ++t) {
    v += s;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (v[i] > threshold) {
        out.bits(i, t) = 1.0;
        v[i] -= threshold;
      }
    }
  }
  return out;
}

PopulationEncoderParams PopulationEncoderParams::tiled(const Vector& low, const Vector& high,
                                                       int pop_size) {
  if (pop_size < 1) throw std::invalid_argument("population size must be >= 1");
  if (low.size() != high.size()) throw std::invalid_argument("bound size mismatch");
  PopulationEncoderParams p{Matrix(low.size(), pop_size), Matrix(low.size(), pop_size)};
  for (Eigen::Index i = 0; i < low.size(); ++i) {
    const double range = high[i] - low[i];
    if (!(range > 0.0)) throw std::invalid_argument("observation range must be positive");
    for (int j = 0; j < pop_size; ++j) {
      p.mu(i, j) = pop_size == 1 ? 0.5 * (low[i] + high[i])
                                 : low[i] + range * j / static_cast<double>(pop_size - 1);
      p.sigma(i, j) = range / pop_size;
    }
  }
  return p;
}

Matrix encode_population(const Vector& s, const Matrix& mu, const Matrix& sigma) {
  if (s.size() != mu.rows()) throw std::invalid_argument("state size does not match encoder");
  Matrix out(mu.rows(), mu.cols());
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.cols(); ++j) {
      const double d = s[i] - mu(i, j);
      out(i, j) = std::exp(-(d * d) / (2.0 * sigma(i, j) * sigma(i, j)));
    }
  }
  return out;
}

Matrix encode_population_batch(const Matrix& states, const Matrix& mu, const Matrix& sigma) {
  if (states.rows() != mu.rows()) throw std::invalid_argument("state size does not match encoder");
  const Eigen::Index n = mu.rows();
  const Eigen::Index p = mu.cols();
  Matrix out(n * p, states.cols());
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        const double d = states(i, b) - mu(i, j);
        out(i * p + j, b) = std::exp(-(d * d) / (2.0 * sigma(i, j) * sigma(i, j)));
      }
    }
  }
  return out;
}

SpikeTrain encode_population_rate(const Matrix& stimulation, RateVariant variant, int time_window,
                                  Rng* rng, double delta) {
  const Vector flat = flatten_row_major(stimulation);
  switch (variant) {
    case RateVariant::uni:
      if (!rng) throw std::invalid_argument("pop-uni requires an rng");
      return encode_uniform(flat, time_window, *rng);
    case RateVariant::poi:
      if (!rng) throw std::invalid_argument("pop-poi requires an rng");
      return encode_poisson(flat, time_window, *rng);
    case RateVariant::det:
      return encode_deterministic(flat, time_window, delta);
  }
  throw std::invalid_argument("invalid rate variant");
}

PopulationGrads grad_population(const Vector& s, const Matrix& mu, const Matrix& sigma,
                                const Matrix& upstream) {
  if (upstream.rows() != mu.rows() || upstream.cols() != mu.cols()) {
    throw std::invalid_argument("upstream gradient shape does not match encoder");
  }
  const Matrix stim = encode_population(s, mu, sigma);
  PopulationGrads g{Matrix(mu.rows(), mu.cols()), Matrix(mu.rows(), mu.cols())};
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.cols(); ++j) {
      const double d = s[i] - mu(i, j);
      const double s2 = sigma(i, j) * sigma(i, j);
      const double common = upstream(i, j) * stim(i, j);
      g.mu(i, j) = common * d / s2;
      g.sigma(i, j) = common * d * d / (s2 * sigma(i, j));
    }
  }
  return g;
}

void accumulate_population_grads(const Matrix& states, const Matrix& mu, const Matrix& sigma,
                                 const Matrix& stimulation, const Matrix& upstream,
                                 Matrix& grad_mu, Matrix& grad_sigma) {
  const Eigen::Index n = mu.rows();
  const Eigen::Index p = mu.cols();
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::Index k = i * p + j;
        const double d = states(i, b) - mu(i, j);
        const double s2 = sigma(i, j) * sigma(i, j);
        const double common = upstream(k, b) * stimulation(k, b);
        grad_mu(i, j) += common * d / s2;
        grad_sigma(i, j) += common * d * d / (s2 * sigma(i, j));
      }
    }
  }
}

void clamp_sigma(Matrix& sigma, double floor) {
  sigma = sigma.cwiseMax(floor);
}

Matrix normalize_to_unit(const Matrix& states, const Vector& low, const Vector& high) {
  if (states.rows() != low.size() || low.size() != high.size()) {
    throw std::invalid_argument("normalize: bound size mismatch");
  }
  Matrix out(states.rows(), states.cols());
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
      const double x = (states(i, b) - low[i]) / (high[i] - low[i]);
      out(i, b) = std::clamp(x, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace pdsan
