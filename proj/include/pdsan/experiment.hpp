#pragma once

#include "pdsan/checkpoint.hpp"
#include "pdsan/config.hpp"
#include "pdsan/dnlearn.hpp"
#include "pdsan/envs.hpp"
#include "pdsan/policy.hpp"
#include "pdsan/td3.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pdsan {

SpikingActorConfig spiking_actor_config(const RunConfig& cfg, const EnvSpec& spec);
MlpActorConfig mlp_actor_config(const RunConfig& cfg, const EnvSpec& spec);
std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const EnvSpec& spec, Rng& init_rng);

/// Agent with networks initialized from the run's `init` stream.
Td3Agent make_agent(const RunConfig& cfg, const EnvSpec& spec);

inline constexpr const char* kLogHeader = "step,eval_mean_reward,eval_std,critic_loss,actor_grad_norm,wall_ms";

std::string format_log_row(const LogRow& row);
std::vector<LogRow> read_log(const std::filesystem::path& path);

struct RunOptions {
  bool resume = false;
  /// Progress lines (one per evaluation); null for silence.
  std::ostream* progress = nullptr;
};

struct RunSummary {
  std::filesystem::path run_dir;
  long steps = 0;
  int evaluations = 0;
  /// Mean and population std of the last (up to) 10 evaluation means.
  double last10_mean = 0.0;
  double last10_std = 0.0;
  double final_eval_mean = 0.0;
  double final_eval_std = 0.0;
  double wall_seconds = 0.0;
  std::shared_ptr<Policy> actor;
};

/// Writes config.json, log.csv, ckpt_<step>.json and summary.json under
/// cfg.run_dir. With `resume`, continues from the newest checkpoint.
RunSummary run_training(const RunConfig& cfg, const RunOptions& options = {});

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);
long checkpoint_step(const std::filesystem::path& ckpt);

/// Noise-free evaluation of a checkpoint's actor on the env named in its
/// config (or `env_name` when given).
EvalResult evaluate_checkpoint(const std::filesystem::path& ckpt, int episodes, std::uint64_t seed,
                               const std::optional<std::string>& env_name = std::nullopt);

struct CompareEntry {
  std::string label;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_mean = 0.0;
  double last10_mean = 0.0;
};

struct RankingRow {
  std::string label;
  int runs_ok = 0;
  int runs_failed = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
  std::vector<double> finals;
};

struct CompareReport {
  std::vector<CompareEntry> entries;
  std::vector<RankingRow> ranking;  // best first
};

struct CompareJob {
  std::string label;
  RunConfig config;
};

/// Runs every job over its config's seed list. Failed runs are recorded and
/// the rest continue. Writes compare.csv, ranking.csv and report.json. With
/// `resume`, finished runs whose config.json matches are reused and
/// unfinished ones continue from their newest checkpoint.
CompareReport run_compare(const std::vector<CompareJob>& jobs, const std::filesystem::path& out_dir, int threads = 1,
                          std::ostream* progress = nullptr, bool resume = false);

/// sqrt(s_p^2 (1/n1 + 1/n2)) with the pooled sample variance s_p^2.
double pooled_standard_error(const std::vector<double>& a, const std::vector<double>& b);

/// TD3-PDSAN training with per-neuron learnable theta; returns the final
/// per-neuron parameters.
ThetaSet train_learnable_thetas(const RunConfig& cfg, const RunOptions& options = {});

struct LearnDnResult {
  ThetaSet thetas;
  Theta center{};
};

/// train_learnable_thetas, k-means, then export to `out`.
LearnDnResult learn_dn(const RunConfig& cfg, int k, const std::filesystem::path& out,
                       const RunOptions& options = {});

enum class Waveform { sine, step, constant };
Waveform parse_waveform(std::string_view s);

struct NeuronTraceOptions {
  NeuronType neuron = NeuronType::dn;
  Waveform waveform = Waveform::sine;
  int steps = 200;
  double amplitude = 1.0;
  double offset = 0.0;
  int period = 50;  // sine period; step onset is period / 2
  DnParams dn;
  LifParams lif;
};

struct NeuronTraceRow {
  int t = 0;
  double input = 0.0;
  double c = 0.0;
  double v = 0.0;
  double u = 0.0;
  int o = 0;
  /// Fixed points of the spike-free map under constant drive `input`.
  std::vector<double> equilibria;
};

/// Single neuron driven by the waveform for `steps` steps.
std::vector<NeuronTraceRow> neuron_trace(const NeuronTraceOptions& opt);
std::vector<double> trace_equilibria(NeuronType neuron, double input, const DnParams& dn, const LifParams& lif);
void write_neuron_trace_csv(std::ostream& out, const std::vector<NeuronTraceRow>& rows);

/// Every coding applied to one observation of `env_name`.
nlohmann::json encode_demo(const std::string& env_name, const Vector& state, int pop_size, int time_window,
                           double det_delta, std::uint64_t seed);

}  // namespace pdsan
