#include "pdsan/dnlearn.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pdsan {

ThetaSet extract_thetas(const SpikingActor& actor) {
  if (actor.config().neuron != NeuronType::dn) throw std::invalid_argument("extract_thetas: actor has no DN layers");
  ThetaSet set;
  for (int l = 0; l < actor.layer_count(); ++l) {
    const DnTheta th = actor.layer_theta(l);
    for (Eigen::Index i = 0; i < th.width(); ++i) {
      set.thetas.push_back({th.a[i], th.b[i], th.c[i], th.d[i]});
      set.layer.push_back(l);
    }
  }
  return set;
}

namespace {

double distance2(const Theta& a, const Theta& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

int nearest(const Theta& p, const std::vector<Theta>& centers) {
  int best = 0;
  double best_d = distance2(p, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = distance2(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double objective(const std::vector<Theta>& points, const std::vector<Theta>& centers,
                 const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += distance2(points[i], centers[labels[i]]);
  return s;
}

KMeansResult lloyd(const std::vector<Theta>& points, std::vector<Theta> centers, int max_iterations) {
  const std::size_t n = points.size();
  const std::size_t k = centers.size();
  KMeansResult r;
  r.labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) r.labels[i] = nearest(points[i], centers);
  for (int it = 0; it < max_iterations; ++it) {
    // Update step: empty clusters keep their previous center.
    std::vector<Theta> sums(k, Theta{0, 0, 0, 0});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < 4; ++d) sums[r.labels[i]][d] += points[i][d];
      ++counts[r.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < 4; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int lbl = nearest(points[i], centers);
      if (lbl != r.labels[i]) {
        r.labels[i] = lbl;
        changed = true;
      }
    }
    r.objective_history.push_back(objective(points, centers, r.labels));
    if (!changed) break;
  }
  r.centers = std::move(centers);
  r.cluster_sizes.assign(k, 0);
  for (int lbl : r.labels) ++r.cluster_sizes[lbl];
  r.objective = r.objective_history.empty() ? objective(points, r.centers, r.labels) : r.objective_history.back();
  return r;
}

}  // namespace

KMeansResult kmeans(const std::vector<Theta>& points, int k, Rng& rng, int restarts, int max_iterations) {
  if (points.empty()) throw std::invalid_argument("kmeans: empty point set");
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > points.size()) {
    throw std::invalid_argument("kmeans: k exceeds the number of points");
  }
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(points.size());
  for (int r = 0; r < restarts; ++r) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: first k entries are the initial centers.
    for (int c = 0; c < k; ++c) {
      const std::size_t j = static_cast<std::size_t>(c) + rng.index(points.size() - static_cast<std::size_t>(c));
      std::swap(order[static_cast<std::size_t>(c)], order[j]);
    }
    std::vector<Theta> init;
    for (int c = 0; c < k; ++c) init.push_back(points[order[static_cast<std::size_t>(c)]]);
    KMeansResult res = lloyd(points, std::move(init), max_iterations);
    if (res.objective < best.objective) best = std::move(res);
  }
  return best;
}

Theta cluster_thetas(const ThetaSet& thetas, int k, std::uint64_t seed) {
  if (thetas.thetas.empty()) throw std::invalid_argument("cluster_thetas: empty theta set");
  if (k == 1) {
    // Closed form of the single-cluster optimum.
    Theta mean{0, 0, 0, 0};
    for (const Theta& t : thetas.thetas) {
      for (std::size_t d = 0; d < 4; ++d) mean[d] += t[d];
    }
    for (double& x : mean) x /= static_cast<double>(thetas.size());
    return mean;
  }
  Rng rng(seed);
  const KMeansResult res = kmeans(thetas.thetas, k, rng);
  const auto largest = std::max_element(res.cluster_sizes.begin(), res.cluster_sizes.end());
  return res.centers[static_cast<std::size_t>(largest - res.cluster_sizes.begin())];
}

void export_theta(const ThetaFile& file, const std::filesystem::path& path) {
  nlohmann::json j;
  j["theta_a"] = file.theta[0];
  j["theta_b"] = file.theta[1];
  j["theta_c"] = file.theta[2];
  j["theta_d"] = file.theta[3];
  j["source_task"] = file.source_task;
  j["seed"] = file.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write theta file " + path.string());
  out << j.dump(2) << '\n';
}

ThetaFile read_theta_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open theta file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("theta file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("theta file " + path.string() + " must hold a JSON object");
  ThetaFile f;
  const char* names[4] = {"theta_a", "theta_b", "theta_c", "theta_d"};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j.contains(names[i])) throw std::runtime_error("theta file is missing field '" + std::string(names[i]) + "'");
    if (!j[names[i]].is_number()) throw std::runtime_error("theta file field '" + std::string(names[i]) + "' must be a number");
    f.theta[i] = j[names[i]].get<double>();
  }
  if (!j.contains("source_task")) throw std::runtime_error("theta file is missing field 'source_task'");
  if (!j["source_task"].is_string()) throw std::runtime_error("theta file field 'source_task' must be a string");
  f.source_task = j["source_task"].get<std::string>();
  if (!j.contains("seed")) throw std::runtime_error("theta file is missing field 'seed'");
  if (!j["seed"].is_number_integer()) throw std::runtime_error("theta file field 'seed' must be an integer");
  f.seed = j["seed"].get<std::uint64_t>();
  return f;
}

DnParams load_theta(const std::filesystem::path& path, const DnParams& base) {
  const ThetaFile f = read_theta_file(path);
  DnParams p = base;
  p.theta_a = f.theta[0];
  p.theta_b = f.theta[1];
  p.theta_c = f.theta[2];
  p.theta_d = f.theta[3];
  p.validate();
  return p;
}

std::filesystem::path default_theta_path() {
  return std::filesystem::path(PDSAN_DATA_DIR) / "theta_star.json";
}

}  // namespace pdsan
