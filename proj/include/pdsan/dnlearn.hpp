#pragma once

#include "pdsan/actor.hpp"
#include "pdsan/neurons.hpp"
#include "pdsan/rng.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pdsan {

using Theta = std::array<double, 4>;  // (theta_a, theta_b, theta_c, theta_d)

/// Per-neuron learned dynamic parameters pooled across all DN layers.
struct ThetaSet {
  std::vector<Theta> thetas;
  std::vector<int> layer;  // layer of each entry
  std::string source_task;
  long step = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return thetas.size(); }
};

ThetaSet extract_thetas(const SpikingActor& actor);

struct KMeansResult {
  std::vector<Theta> centers;
  std::vector<int> labels;
  std::vector<std::size_t> cluster_sizes;
  /// Within-cluster sum of squares after each Lloyd iteration of the
  /// selected restart.
  std::vector<double> objective_history;
  double objective = 0.0;
};

/// Lloyd's algorithm, `restarts` seeded random initializations (distinct
/// points as initial centers), best objective kept; ties go to the lowest
/// index. Throws if k is zero or exceeds the number of points.
KMeansResult kmeans(const std::vector<Theta>& points, int k, Rng& rng, int restarts = 10,
                    int max_iterations = 100);

/// Center of the largest cluster (k = 1 gives the arithmetic mean).
Theta cluster_thetas(const ThetaSet& thetas, int k, std::uint64_t seed = 0);

struct ThetaFile {
  Theta theta{};
  std::string source_task;
  std::uint64_t seed = 0;
};

void export_theta(const ThetaFile& file, const std::filesystem::path& path);
/// Throws std::runtime_error naming the offending field on malformed input.
ThetaFile read_theta_file(const std::filesystem::path& path);
/// Thetas from the file; threshold, current decay and clamp keep `base`.
DnParams load_theta(const std::filesystem::path& path, const DnParams& base = {});

/// Path of the shipped default parameter file.
std::filesystem::path default_theta_path();

}  // namespace pdsan
