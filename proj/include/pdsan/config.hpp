#pragma once

#include "pdsan/encoding.hpp"
#include "pdsan/neurons.hpp"
#include "pdsan/td3.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdsan {

enum class Algo { td3, td3_pop, td3_popsan, td3_pdsan };

Algo parse_algo(std::string_view s);
std::string_view to_string(Algo a);
bool is_spiking(Algo a);

/// Invalid run configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  std::string env;
  Algo algo = Algo::td3_pdsan;
  /// Empty for the plain TD3 baseline.
  std::optional<InputCoding> input_coding;
  NeuronType neuron_type = NeuronType::dn;
  int pop_size = 10;
  int out_pop_size = 10;
  int time_window = 5;
  std::vector<int> actor_hidden{256, 256};
  Td3Config td3;
  std::uint64_t seed = 0;
  std::string run_dir;
  int max_episode_steps = 1000;

  std::string theta_file;
  DnParams dn;
  LifParams lif;
  double surrogate_window = 0.5;
  double det_delta = kDefaultDetDelta;
  bool learnable_theta = false;
  double theta_lr = 1e-4;
  bool full_recovery_grad = false;
  double theta_clamp = 2.0;

  /// Seeds used by compare.
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// When false the wall_ms log column is written as 0 so logs are
  /// byte-comparable across runs.
  bool log_wall_time = true;
  /// Checkpoints retained in run_dir; 0 keeps all.
  int keep_checkpoints = 0;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

/// Reads PDSAN_<KEY> from the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Parses, applies PDSAN_<KEY> overrides, fills algorithm-dependent
/// defaults and validates. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& j, const EnvLookup& env = process_env);
RunConfig load_run_config(const std::string& path, const EnvLookup& env = process_env);

/// Fully resolved config; parse_run_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& c);

}  // namespace pdsan
