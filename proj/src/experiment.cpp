#include "pdsan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pdsan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

SpikingActorConfig spiking_actor_config(const RunConfig& cfg, const EnvSpec& spec) {
  if (!is_spiking(cfg.algo)) throw std::invalid_argument("spiking_actor_config: algo is not spiking");
  SpikingActorConfig a;
  a.state_dim = spec.state_dim;
  a.action_dim = spec.action_dim;
  a.hidden = cfg.actor_hidden;
  a.pop_size = cfg.pop_size;
  a.out_pop_size = cfg.out_pop_size;
  a.time_window = cfg.time_window;
  a.coding = cfg.input_coding.value_or(InputCoding::pop);
  a.neuron = cfg.neuron_type;
  a.dn = cfg.dn;
  a.lif = cfg.lif;
  a.surrogate_window = cfg.surrogate_window;
  a.det_delta = cfg.det_delta;
  a.learnable_theta = cfg.learnable_theta;
  a.full_recovery_grad = cfg.full_recovery_grad;
  a.theta_clamp = cfg.theta_clamp;
  a.obs_low = spec.obs_low;
  a.obs_high = spec.obs_high;
  return a;
}

MlpActorConfig mlp_actor_config(const RunConfig& cfg, const EnvSpec& spec) {
  MlpActorConfig a;
  a.state_dim = spec.state_dim;
  a.action_dim = spec.action_dim;
  a.hidden = cfg.actor_hidden;
  a.population = cfg.algo == Algo::td3_pop;
  a.pop_size = cfg.pop_size;
  a.out_pop_size = cfg.out_pop_size;
  a.obs_low = spec.obs_low;
  a.obs_high = spec.obs_high;
  return a;
}

std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const EnvSpec& spec, Rng& init_rng) {
  if (is_spiking(cfg.algo)) return std::make_unique<SpikingPolicy>(SpikingActor(spiking_actor_config(cfg, spec), init_rng));
  return std::make_unique<MlpPolicy>(mlp_actor_config(cfg, spec), init_rng);
}

namespace {

void apply_theta_lr(const RunConfig& cfg, Td3Agent& agent) {
  const auto* sp = dynamic_cast<const SpikingPolicy*>(agent.actor.get());
  if (!sp || !cfg.learnable_theta) return;
  for (int l = 0; l < sp->actor().layer_count(); ++l) {
    if (auto idx = sp->actor().theta_index(l)) agent.actor_opt.set_tensor_learning_rate(*idx, cfg.theta_lr);
  }
}

}  // namespace

Td3Agent make_agent(const RunConfig& cfg, const EnvSpec& spec) {
  Rng init = Rng(cfg.seed).split(stream::init);
  Td3Agent agent = Td3Agent::create(make_policy(cfg, spec, init), cfg.td3, init);
  apply_theta_lr(cfg, agent);
  return agent;
}

std::string format_log_row(const LogRow& r) {
  return std::to_string(r.step) + "," + fmt_double(r.eval_mean) + "," + fmt_double(r.eval_std) + "," +
         fmt_double(r.critic_loss) + "," + fmt_double(r.actor_grad_norm) + "," + fmt_double(r.wall_ms);
}

std::vector<LogRow> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<LogRow> rows;
  std::string line;
  std::getline(in, line);
  if (line != kLogHeader) throw std::runtime_error(path.string() + ": unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    // A torn final line from a crash is ignored.
    if (cells.size() != 6) break;
    LogRow r;
    try {
      r.step = std::stol(cells[0]);
      r.eval_mean = std::stod(cells[1]);
      r.eval_std = std::stod(cells[2]);
      r.critic_loss = std::stod(cells[3]);
      r.actor_grad_norm = std::stod(cells[4]);
      r.wall_ms = std::stod(cells[5]);
    } catch (const std::exception&) {
      break;
    }
    rows.push_back(r);
  }
  return rows;
}

long checkpoint_step(const fs::path& ckpt) {
  const std::string stem = ckpt.stem().string();
  if (stem.rfind("ckpt_", 0) != 0) return -1;
  try {
    std::size_t used = 0;
    const long step = std::stol(stem.substr(5), &used);
    return used == stem.size() - 5 ? step : -1;
  } catch (const std::exception&) {
    return -1;
  }
}

namespace {

std::vector<std::pair<long, fs::path>> list_checkpoints(const fs::path& dir) {
  std::vector<std::pair<long, fs::path>> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    const long step = checkpoint_step(e.path());
    if (step >= 0) out.emplace_back(step, e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
  auto all = list_checkpoints(run_dir);
  if (all.empty()) return std::nullopt;
  return all.back().second;
}

namespace {

struct TrainedRun {
  RunSummary summary;
  Td3Agent agent;
};

TrainedRun train(const RunConfig& cfg, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.run_dir;
  fs::create_directories(dir);
  save_json(dir / "config.json", to_json(cfg));

  auto env = make_env(cfg.env, cfg.max_episode_steps);
  auto eval_env = env->clone();
  const EnvSpec& spec = env->spec();

  Td3Agent agent;
  long start = 0;
  const fs::path log_path = dir / "log.csv";
  std::optional<fs::path> ckpt = options.resume ? latest_checkpoint(dir) : std::nullopt;
  if (ckpt) {
    const json j = load_json(*ckpt);
    agent = agent_from_json(j.at("agent"), cfg.td3);
    apply_theta_lr(cfg, agent);
    start = j.at("step").get<long>();
    if (agent.actor->state_dim() != spec.state_dim || agent.actor->action_dim() != spec.action_dim) {
      throw std::runtime_error("checkpoint " + ckpt->string() + " does not match env " + cfg.env);
    }
    // Rows past the checkpoint would be repeated by the resumed run.
    std::vector<LogRow> kept;
    if (fs::exists(log_path)) {
      for (const auto& r : read_log(log_path)) {
        if (r.step <= start) kept.push_back(r);
      }
    }
    const fs::path tmp = log_path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << kLogHeader << '\n';
      for (const auto& r : kept) out << format_log_row(r) << '\n';
    }
    fs::rename(tmp, log_path);
  } else {
    agent = make_agent(cfg, spec);
    std::ofstream out(log_path, std::ios::trunc);
    out << kLogHeader << '\n';
  }

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("cannot append to " + log_path.string());

  Td3Trainer trainer(agent, *env, *eval_env, cfg.td3, cfg.seed, start);
  long last_saved = ckpt ? start : -1;
  TrainHooks hooks;
  hooks.on_eval = [&](const LogRow& row) {
    LogRow r = row;
    if (!cfg.log_wall_time) r.wall_ms = 0.0;
    log << format_log_row(r) << '\n';
    log.flush();
    if (options.progress) {
      *options.progress << cfg.run_dir << " step " << r.step << " eval " << r.eval_mean << " +- " << r.eval_std
                        << '\n';
    }
  };
  hooks.on_checkpoint = [&](long step) {
    if (step == last_saved) return;
    json j = {{"format", "pdsan-checkpoint"},
              {"version", 1},
              {"step", step},
              {"config", to_json(cfg)},
              {"agent", agent_to_json(agent)}};
    save_json(dir / ("ckpt_" + std::to_string(step) + ".json"), j);
    last_saved = step;
    if (cfg.keep_checkpoints > 0) {
      auto all = list_checkpoints(dir);
      const auto keep = static_cast<std::size_t>(cfg.keep_checkpoints);
      for (std::size_t i = 0; i + keep < all.size(); ++i) fs::remove(all[i].second);
    }
  };
  trainer.run(hooks);
  log.close();

  RunSummary s;
  s.run_dir = dir;
  s.steps = trainer.steps_done();
  const auto rows = read_log(log_path);
  s.evaluations = static_cast<int>(rows.size());
  std::vector<double> last;
  for (std::size_t i = rows.size() > 10 ? rows.size() - 10 : 0; i < rows.size(); ++i) last.push_back(rows[i].eval_mean);
  s.last10_mean = mean_of(last);
  double ss = 0.0;
  for (double x : last) ss += (x - s.last10_mean) * (x - s.last10_mean);
  s.last10_std = last.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(last.size()));
  if (!rows.empty()) {
    s.final_eval_mean = rows.back().eval_mean;
    s.final_eval_std = rows.back().eval_std;
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json summary = {{"env", cfg.env},
                  {"algo", std::string(to_string(cfg.algo))},
                  {"seed", cfg.seed},
                  {"steps", s.steps},
                  {"evaluations", s.evaluations},
                  {"last10_mean", s.last10_mean},
                  {"last10_std", s.last10_std},
                  {"final_eval_mean", s.final_eval_mean},
                  {"final_eval_std", s.final_eval_std}};
  if (cfg.log_wall_time) summary["wall_seconds"] = s.wall_seconds;
  save_json(dir / "summary.json", summary);
  s.actor = std::shared_ptr<Policy>(agent.actor->clone());
  return {std::move(s), std::move(agent)};
}

}  // namespace

RunSummary run_training(const RunConfig& cfg, const RunOptions& options) { return train(cfg, options).summary; }

EvalResult evaluate_checkpoint(const fs::path& ckpt, int episodes, std::uint64_t seed,
                               const std::optional<std::string>& env_name) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const json j = load_json(ckpt);
  if (!j.contains("agent") || !j.contains("config")) throw std::runtime_error(ckpt.string() + " is not a checkpoint");
  const json& cfg = j["config"];
  const std::string name = env_name ? *env_name : cfg.at("env").get<std::string>();
  const int max_steps = cfg.contains("max_episode_steps") ? cfg["max_episode_steps"].get<int>() : 1000;
  auto env = make_env(name, max_steps);
  auto actor = policy_from_json(j["agent"].at("actor"));
  if (actor->state_dim() != env->spec().state_dim || actor->action_dim() != env->spec().action_dim) {
    throw std::runtime_error("checkpoint actor (" + std::to_string(actor->state_dim()) + " -> " +
                             std::to_string(actor->action_dim()) + ") does not match env " + name);
  }
  Rng env_rng = Rng(seed).split(stream::eval_env);
  Rng coding_rng = Rng(seed).split(stream::eval_coding);
  return evaluate(*actor, *env, episodes, env_rng, coding_rng);
}

double pooled_standard_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("pooled_standard_error needs >= 2 samples per group");
  auto ss = [](const std::vector<double>& x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s;
  };
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double sp2 = (ss(a) + ss(b)) / (n1 + n2 - 2.0);
  return std::sqrt(sp2 * (1.0 / n1 + 1.0 / n2));
}

CompareReport run_compare(const std::vector<CompareJob>& jobs, const fs::path& out_dir, int threads,
                          std::ostream* progress, bool resume) {
  if (jobs.empty()) throw std::invalid_argument("compare: no configs given");
  fs::create_directories(out_dir);

  struct Task {
    std::size_t job;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (std::uint64_t s : jobs[i].config.seeds) tasks.push_back({i, s});
  }
  std::vector<CompareEntry> entries(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;

  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& task = tasks[k];
      CompareEntry& e = entries[k];
      e.label = jobs[task.job].label;
      e.seed = task.seed;
      RunConfig cfg = jobs[task.job].config;
      cfg.seed = task.seed;
      cfg.run_dir = (out_dir / e.label / ("seed" + std::to_string(task.seed))).string();
      try {
        const fs::path dir = cfg.run_dir;
        const bool same_config = resume && fs::exists(dir / "config.json") && load_json(dir / "config.json") == to_json(cfg);
        if (same_config && fs::exists(dir / "summary.json")) {
          const json s = load_json(dir / "summary.json");
          e.final_mean = s.at("final_eval_mean").get<double>();
          e.last10_mean = s.at("last10_mean").get<double>();
        } else {
          RunOptions opt;
          opt.resume = same_config;
          const RunSummary s = run_training(cfg, opt);
          e.final_mean = s.final_eval_mean;
          e.last10_mean = s.last10_mean;
        }
        e.ok = true;
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
      if (progress) {
        std::lock_guard<std::mutex> lock(io);
        *progress << e.label << " seed " << e.seed << (e.ok ? " final " + fmt_double(e.final_mean) : " FAILED: " + e.error)
                  << '\n';
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CompareReport report;
  report.entries = entries;
  for (const auto& job : jobs) {
    if (std::any_of(report.ranking.begin(), report.ranking.end(), [&](const RankingRow& r) { return r.label == job.label; })) {
      continue;
    }
    RankingRow row;
    row.label = job.label;
    for (const auto& e : entries) {
      if (e.label != job.label) continue;
      if (e.ok) {
        row.finals.push_back(e.final_mean);
      } else {
        ++row.runs_failed;
      }
    }
    row.runs_ok = static_cast<int>(row.finals.size());
    row.mean = mean_of(row.finals);
    double ss = 0.0;
    for (double x : row.finals) ss += (x - row.mean) * (x - row.mean);
    row.stddev = row.finals.size() > 1 ? std::sqrt(ss / static_cast<double>(row.finals.size() - 1)) : 0.0;
    report.ranking.push_back(std::move(row));
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [](const RankingRow& a, const RankingRow& b) {
    if ((a.runs_ok > 0) != (b.runs_ok > 0)) return a.runs_ok > 0;
    return a.mean > b.mean;
  });

  {
    std::ofstream out(out_dir / "compare.csv");
    out << "label,seed,status,final_mean,last10_mean,error\n";
    for (const auto& e : entries) {
      std::string err = e.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out << e.label << ',' << e.seed << ',' << (e.ok ? "ok" : "failed") << ',' << fmt_double(e.final_mean) << ','
          << fmt_double(e.last10_mean) << ',' << err << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "ranking.csv");
    out << "rank,label,runs_ok,runs_failed,mean_final,std_final,finals\n";
    for (std::size_t i = 0; i < report.ranking.size(); ++i) {
      const auto& r = report.ranking[i];
      std::string finals;
      for (std::size_t k = 0; k < r.finals.size(); ++k) finals += (k ? ";" : "") + fmt_double(r.finals[k]);
      out << i + 1 << ',' << r.label << ',' << r.runs_ok << ',' << r.runs_failed << ',' << fmt_double(r.mean) << ','
          << fmt_double(r.stddev) << ',' << finals << '\n';
    }
  }
  json j = json::object();
  j["runs"] = json::array();
  for (const auto& e : entries) {
    j["runs"].push_back({{"label", e.label}, {"seed", e.seed}, {"ok", e.ok}, {"final_mean", e.final_mean},
                         {"last10_mean", e.last10_mean}, {"error", e.error}});
  }
  j["ranking"] = json::array();
  for (const auto& r : report.ranking) {
    j["ranking"].push_back({{"label", r.label}, {"runs_ok", r.runs_ok}, {"runs_failed", r.runs_failed},
                            {"mean_final", r.mean}, {"std_final", r.stddev}, {"finals", r.finals}});
  }
  save_json(out_dir / "report.json", j);
  return report;
}

ThetaSet train_learnable_thetas(const RunConfig& cfg, const RunOptions& options) {
  if (!cfg.learnable_theta) throw std::invalid_argument("train_learnable_thetas: learnable_theta is off");
  TrainedRun run = train(cfg, options);
  const auto* sp = dynamic_cast<const SpikingPolicy*>(run.agent.actor.get());
  if (!sp) throw std::logic_error("train_learnable_thetas: actor is not spiking");
  ThetaSet set = extract_thetas(sp->actor());
  set.source_task = cfg.env;
  set.step = run.summary.steps;
  set.seed = cfg.seed;
  return set;
}

LearnDnResult learn_dn(const RunConfig& cfg, int k, const fs::path& out, const RunOptions& options) {
  LearnDnResult r;
  r.thetas = train_learnable_thetas(cfg, options);
  r.center = cluster_thetas(r.thetas, k, cfg.seed);
  export_theta(ThetaFile{r.center, cfg.env, cfg.seed}, out);

  fs::create_directories(cfg.run_dir);
  std::ofstream csv(fs::path(cfg.run_dir) / "thetas.csv");
  csv << "layer,theta_a,theta_b,theta_c,theta_d\n";
  for (std::size_t i = 0; i < r.thetas.size(); ++i) {
    csv << r.thetas.layer[i];
    for (double x : r.thetas.thetas[i]) csv << ',' << fmt_double(x);
    csv << '\n';
  }
  return r;
}

Waveform parse_waveform(std::string_view s) {
  if (s == "sine") return Waveform::sine;
  if (s == "step") return Waveform::step;
  if (s == "constant") return Waveform::constant;
  throw std::invalid_argument("unknown waveform '" + std::string(s) + "' (sine, step, constant)");
}

std::vector<double> trace_equilibria(NeuronType neuron, double input, const DnParams& dn, const LifParams& lif) {
  if (neuron == NeuronType::lif) {
    const double c = input / (1.0 - lif.d_c);
    return {c / (1.0 - lif.v_f)};
  }
  // Fixed points of the map: u = theta_b v and v^2 - (1 + theta_b) v + c = 0.
  const double c = input / (1.0 - dn.d_c);
  const double p = 1.0 + dn.theta_b;
  const double disc = p * p - 4.0 * c;
  if (disc < 0.0) return {};
  if (disc == 0.0) return {p / 2.0};
  const double r = std::sqrt(disc);
  return {(p - r) / 2.0, (p + r) / 2.0};
}

std::vector<NeuronTraceRow> neuron_trace(const NeuronTraceOptions& opt) {
  if (opt.steps < 0) throw std::invalid_argument("neuron_trace: steps must be >= 0");
  if (opt.period < 1) throw std::invalid_argument("neuron_trace: period must be >= 1");
  opt.dn.validate();
  opt.lif.validate();
  std::vector<NeuronTraceRow> rows;
  rows.reserve(static_cast<std::size_t>(opt.steps));
  LayerState st = LayerState::zeros(1, 1);
  Matrix drive(1, 1);
  for (int t = 1; t <= opt.steps; ++t) {
    double in = opt.offset;
    switch (opt.waveform) {
      case Waveform::sine:
        in += opt.amplitude * std::sin(2.0 * std::numbers::pi * t / opt.period);
        break;
      case Waveform::step:
        in += t > opt.period / 2 ? opt.amplitude : 0.0;
        break;
      case Waveform::constant:
        in += opt.amplitude;
        break;
    }
    drive(0, 0) = in;
    st = opt.neuron == NeuronType::dn ? dn_step(st, drive, opt.dn) : lif_step(st, drive, opt.lif);
    rows.push_back({t, in, st.c(0, 0), st.v(0, 0), st.u(0, 0), st.o(0, 0) > 0.5 ? 1 : 0,
                    trace_equilibria(opt.neuron, in, opt.dn, opt.lif)});
  }
  return rows;
}

void write_neuron_trace_csv(std::ostream& out, const std::vector<NeuronTraceRow>& rows) {
  out << "t,I,c,v,u,o,equilibria\n";
  for (const auto& r : rows) {
    out << r.t << ',' << fmt_double(r.input) << ',' << fmt_double(r.c) << ',' << fmt_double(r.v) << ','
        << fmt_double(r.u) << ',' << r.o << ',';
    for (std::size_t i = 0; i < r.equilibria.size(); ++i) out << (i ? ";" : "") << fmt_double(r.equilibria[i]);
    out << '\n';
  }
}

json encode_demo(const std::string& env_name, const Vector& state, int pop_size, int time_window, double det_delta,
                 std::uint64_t seed) {
  auto env = make_env(env_name);
  const EnvSpec& spec = env->spec();
  if (state.size() != spec.state_dim) {
    throw std::invalid_argument("encode-demo: " + env_name + " expects " + std::to_string(spec.state_dim) +
                                " state values");
  }
  auto rows = [](const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      out.push_back(row);
    }
    return out;
  };
  const Vector norm = normalize_obs(state, spec);
  const auto enc = PopulationEncoderParams::tiled(spec.obs_low, spec.obs_high, pop_size);
  const Matrix stim = encode_population(state, enc);
  Rng base = Rng(seed).split(stream::coding);

  json j;
  j["env"] = env_name;
  j["state"] = std::vector<double>(state.data(), state.data() + state.size());
  j["normalized"] = std::vector<double>(norm.data(), norm.data() + norm.size());
  j["T1"] = time_window;
  j["pop_size"] = pop_size;
  j["seed"] = seed;
  j["mu"] = rows(enc.mu);
  j["sigma"] = rows(enc.sigma);
  json codes;
  Rng r1 = base.split(1);
  codes["uni"] = rows(encode_uniform(norm, time_window, r1).bits);
  Rng r2 = base.split(2);
  codes["poi"] = rows(encode_poisson(norm, time_window, r2).bits);
  codes["det"] = rows(encode_deterministic(norm, time_window, det_delta).bits);
  codes["pop"] = rows(stim);
  Rng r3 = base.split(3);
  codes["pop-uni"] = rows(encode_population_rate(stim, RateVariant::uni, time_window, &r3, det_delta).bits);
  Rng r4 = base.split(4);
  codes["pop-poi"] = rows(encode_population_rate(stim, RateVariant::poi, time_window, &r4, det_delta).bits);
  codes["pop-det"] = rows(encode_population_rate(stim, RateVariant::det, time_window, nullptr, det_delta).bits);
  j["codings"] = codes;
  return j;
}

}  // namespace pdsan
