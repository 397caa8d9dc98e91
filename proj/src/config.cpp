#include "pdsan/config.hpp"

#include "pdsan/dnlearn.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace pdsan {

using nlohmann::json;

Algo parse_algo(std::string_view s) {
  if (s == "td3") return Algo::td3;
  if (s == "td3-pop") return Algo::td3_pop;
  if (s == "td3-popsan") return Algo::td3_popsan;
  if (s == "td3-pdsan") return Algo::td3_pdsan;
  throw std::invalid_argument("unknown algo '" + std::string(s) + "' (td3, td3-pop, td3-popsan, td3-pdsan)");
}

std::string_view to_string(Algo a) {
  switch (a) {
    case Algo::td3: return "td3";
    case Algo::td3_pop: return "td3-pop";
    case Algo::td3_popsan: return "td3-popsan";
    case Algo::td3_pdsan: return "td3-pdsan";
  }
  return "?";
}

bool is_spiking(Algo a) { return a == Algo::td3_popsan || a == Algo::td3_pdsan; }

ConfigError::ConfigError(std::string field, const std::string& what)
    : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "has the wrong type (" + std::string(v.type_name()) + ")");
  }
}

long get_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(key, "must be an integer");
  return v.get<long>();
}

std::string env_name(const std::string& key) {
  std::string out = "PDSAN_";
  for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

json parse_override(const std::string& raw) {
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) return json(raw);
  return v;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "env",          "algo",           "input_coding",   "neuron_type",    "pop_size",
      "out_pop_size", "T1",             "actor_hidden",   "critic_hidden",  "actor_lr",
      "critic_lr",    "gamma",          "eta",            "sigma",          "sigma_tilde",
      "clip_c",       "batch_size",     "policy_delay",   "total_steps",    "eval_every",
      "eval_episodes", "warmup_steps",  "buffer_capacity", "stop_at_reward", "seed",
      "run_dir",      "max_episode_steps", "theta_file",  "theta",          "dn_v_th",
      "dn_decay",     "v_clamp",        "lif_decay",      "lif_v_f",        "lif_v_th",
      "surrogate_window", "det_delta",  "learnable_theta", "theta_lr",      "full_recovery_grad",
      "theta_clamp",  "seeds",          "log_wall_time",  "keep_checkpoints"};
  return keys;
}

}  // namespace

RunConfig parse_run_config(const json& input, const EnvLookup& env) {
  if (!input.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  json j = input;
  const auto& keys = known_keys();
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError(key, "unknown key");
  }
  if (env) {
    for (const auto& key : keys) {
      if (auto v = env(env_name(key))) j[key] = parse_override(*v);
    }
  }

  RunConfig c;
  auto has = [&](const char* key) { return j.contains(key) && !j[key].is_null(); };

  if (!has("env")) throw ConfigError("env", "required");
  c.env = get_as<std::string>(j["env"], "env");
  if (c.env != "pendulum" && c.env != "pointmass") {
    throw ConfigError("env", "unknown environment '" + c.env + "' (pendulum, pointmass)");
  }
  if (has("algo")) {
    try {
      c.algo = parse_algo(get_as<std::string>(j["algo"], "algo"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("algo", e.what());
    }
  }

  std::optional<InputCoding> coding;
  if (has("input_coding")) {
    try {
      coding = parse_input_coding(get_as<std::string>(j["input_coding"], "input_coding"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("input_coding", e.what());
    }
  }
  std::optional<NeuronType> neuron;
  if (has("neuron_type")) {
    try {
      neuron = parse_neuron_type(get_as<std::string>(j["neuron_type"], "neuron_type"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("neuron_type", e.what());
    }
  }

  switch (c.algo) {
    case Algo::td3:
      if (coding) throw ConfigError("input_coding", "td3 uses raw observations; remove input_coding");
      if (neuron) throw ConfigError("neuron_type", "td3 has no spiking neurons");
      break;
    case Algo::td3_pop:
      if (coding && *coding != InputCoding::pop) throw ConfigError("input_coding", "td3-pop requires pop");
      if (neuron) throw ConfigError("neuron_type", "td3-pop has no spiking neurons");
      c.input_coding = InputCoding::pop;
      break;
    case Algo::td3_popsan:
      if (neuron && *neuron != NeuronType::lif) throw ConfigError("neuron_type", "td3-popsan requires lif");
      c.input_coding = coding.value_or(InputCoding::pop);
      c.neuron_type = NeuronType::lif;
      break;
    case Algo::td3_pdsan:
      c.input_coding = coding.value_or(InputCoding::pop);
      c.neuron_type = neuron.value_or(NeuronType::dn);
      break;
  }

  auto count = [&](const char* key, auto& out, long lo) {
    if (!has(key)) return;
    const long v = get_count(j[key], key);
    if (v < lo) throw ConfigError(key, "must be >= " + std::to_string(lo));
    out = static_cast<std::remove_reference_t<decltype(out)>>(v);
  };
  auto real = [&](const char* key, double& out) {
    if (has(key)) out = get_as<double>(j[key], key);
  };
  auto flag = [&](const char* key, bool& out) {
    if (has(key)) out = get_as<bool>(j[key], key);
  };
  auto widths = [&](const char* key, std::vector<int>& out) {
    if (!has(key)) return;
    out = get_as<std::vector<int>>(j[key], key);
    if (out.empty() || std::any_of(out.begin(), out.end(), [](int w) { return w < 1; })) {
      throw ConfigError(key, "must be a nonempty list of positive widths");
    }
  };

  count("pop_size", c.pop_size, 1);
  count("out_pop_size", c.out_pop_size, 1);
  count("T1", c.time_window, 1);
  widths("actor_hidden", c.actor_hidden);
  widths("critic_hidden", c.td3.critic_hidden);

  c.td3.actor_lr = is_spiking(c.algo) ? 1e-4 : 1e-3;
  auto bounded = [&](const char* key, double& out, double lo, double hi, bool open_lo, bool open_hi) {
    real(key, out);
    const bool ok = (open_lo ? out > lo : out >= lo) && (open_hi ? out < hi : out <= hi);
    if (!ok) {
      std::ostringstream msg;
      msg << "must lie in " << (open_lo ? '(' : '[') << lo << ", " << hi << (open_hi ? ')' : ']');
      throw ConfigError(key, msg.str());
    }
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  bounded("actor_lr", c.td3.actor_lr, 0.0, inf, false, true);
  bounded("critic_lr", c.td3.critic_lr, 0.0, inf, false, true);
  bounded("gamma", c.td3.gamma, 0.0, 1.0, false, false);
  bounded("eta", c.td3.eta, 0.0, 1.0, true, true);
  bounded("sigma", c.td3.sigma, 0.0, inf, false, true);
  bounded("sigma_tilde", c.td3.sigma_tilde, 0.0, inf, false, true);
  bounded("clip_c", c.td3.clip_c, 0.0, inf, false, true);
  count("batch_size", c.td3.batch_size, 1);
  count("policy_delay", c.td3.policy_delay, 1);
  count("total_steps", c.td3.total_steps, 0);
  count("eval_every", c.td3.eval_every, 1);
  count("eval_episodes", c.td3.eval_episodes, 1);
  count("warmup_steps", c.td3.warmup_steps, 0);
  count("buffer_capacity", c.td3.buffer_capacity, 1);
  if (has("stop_at_reward")) c.td3.stop_at_reward = get_as<double>(j["stop_at_reward"], "stop_at_reward");
  try {
    c.td3.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("td3", e.what());
  }

  if (has("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      throw ConfigError("seed", "must be a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  count("max_episode_steps", c.max_episode_steps, 1);
  c.run_dir = has("run_dir") ? get_as<std::string>(j["run_dir"], "run_dir")
                             : "runs/" + c.env + "_" + std::string(to_string(c.algo)) + "_s" + std::to_string(c.seed);

  flag("learnable_theta", c.learnable_theta);
  c.full_recovery_grad = c.learnable_theta;
  flag("full_recovery_grad", c.full_recovery_grad);
  c.theta_lr = c.td3.actor_lr;
  real("theta_lr", c.theta_lr);
  real("theta_clamp", c.theta_clamp);
  if (!(c.theta_clamp > 0.0)) throw ConfigError("theta_clamp", "must be positive");
  if (c.learnable_theta && !(c.neuron_type == NeuronType::dn && is_spiking(c.algo))) {
    throw ConfigError("learnable_theta", "requires a dn spiking actor");
  }

  c.theta_file = has("theta_file") ? get_as<std::string>(j["theta_file"], "theta_file") : default_theta_path().string();
  if (has("theta")) {
    const auto t = get_as<std::vector<double>>(j["theta"], "theta");
    if (t.size() != 4) throw ConfigError("theta", "needs 4 values (a, b, c, d)");
    c.dn.theta_a = t[0];
    c.dn.theta_b = t[1];
    c.dn.theta_c = t[2];
    c.dn.theta_d = t[3];
  } else if (c.neuron_type == NeuronType::dn && is_spiking(c.algo)) {
    try {
      const ThetaFile f = read_theta_file(c.theta_file);
      c.dn.theta_a = f.theta[0];
      c.dn.theta_b = f.theta[1];
      c.dn.theta_c = f.theta[2];
      c.dn.theta_d = f.theta[3];
    } catch (const std::exception& e) {
      throw ConfigError("theta_file", e.what());
    }
  }
  real("dn_v_th", c.dn.v_th);
  real("dn_decay", c.dn.d_c);
  c.dn.v_clamp = 10.0;
  if (j.contains("v_clamp")) {
    if (j["v_clamp"].is_null()) {
      c.dn.v_clamp.reset();
    } else {
      c.dn.v_clamp = get_as<double>(j["v_clamp"], "v_clamp");
    }
  }
  real("lif_decay", c.lif.d_c);
  real("lif_v_f", c.lif.v_f);
  real("lif_v_th", c.lif.v_th);
  try {
    c.dn.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("dn", e.what());
  }
  try {
    c.lif.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("lif", e.what());
  }
  real("surrogate_window", c.surrogate_window);
  if (!(c.surrogate_window > 0.0)) throw ConfigError("surrogate_window", "must be positive");
  real("det_delta", c.det_delta);
  if (!(c.det_delta > 0.0 && c.det_delta < 1.0)) throw ConfigError("det_delta", "must lie in (0, 1)");

  if (has("seeds")) {
    c.seeds = get_as<std::vector<std::uint64_t>>(j["seeds"], "seeds");
    if (c.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  }
  flag("log_wall_time", c.log_wall_time);
  count("keep_checkpoints", c.keep_checkpoints, 0);
  return c;
}

RunConfig load_run_config(const std::string& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("<file>", path + " is not valid JSON");
  return parse_run_config(j, env);
}

json to_json(const RunConfig& c) {
  json j;
  j["env"] = c.env;
  j["algo"] = std::string(to_string(c.algo));
  if (c.input_coding) j["input_coding"] = std::string(to_string(*c.input_coding));
  if (is_spiking(c.algo)) j["neuron_type"] = std::string(to_string(c.neuron_type));
  j["pop_size"] = c.pop_size;
  j["out_pop_size"] = c.out_pop_size;
  j["T1"] = c.time_window;
  j["actor_hidden"] = c.actor_hidden;
  j["critic_hidden"] = c.td3.critic_hidden;
  j["actor_lr"] = c.td3.actor_lr;
  j["critic_lr"] = c.td3.critic_lr;
  j["gamma"] = c.td3.gamma;
  j["eta"] = c.td3.eta;
  j["sigma"] = c.td3.sigma;
  j["sigma_tilde"] = c.td3.sigma_tilde;
  j["clip_c"] = c.td3.clip_c;
  j["batch_size"] = c.td3.batch_size;
  j["policy_delay"] = c.td3.policy_delay;
  j["total_steps"] = c.td3.total_steps;
  j["eval_every"] = c.td3.eval_every;
  j["eval_episodes"] = c.td3.eval_episodes;
  j["warmup_steps"] = c.td3.warmup_steps;
  j["buffer_capacity"] = c.td3.buffer_capacity;
  j["stop_at_reward"] = c.td3.stop_at_reward ? json(*c.td3.stop_at_reward) : json(nullptr);
  j["seed"] = c.seed;
  j["run_dir"] = c.run_dir;
  j["max_episode_steps"] = c.max_episode_steps;
  j["theta_file"] = c.theta_file;
  j["theta"] = {c.dn.theta_a, c.dn.theta_b, c.dn.theta_c, c.dn.theta_d};
  j["dn_v_th"] = c.dn.v_th;
  j["dn_decay"] = c.dn.d_c;
  j["v_clamp"] = c.dn.v_clamp ? json(*c.dn.v_clamp) : json(nullptr);
  j["lif_decay"] = c.lif.d_c;
  j["lif_v_f"] = c.lif.v_f;
  j["lif_v_th"] = c.lif.v_th;
  j["surrogate_window"] = c.surrogate_window;
  j["det_delta"] = c.det_delta;
  j["learnable_theta"] = c.learnable_theta;
  j["theta_lr"] = c.theta_lr;
  j["full_recovery_grad"] = c.full_recovery_grad;
  j["theta_clamp"] = c.theta_clamp;
  j["seeds"] = c.seeds;
  j["log_wall_time"] = c.log_wall_time;
  j["keep_checkpoints"] = c.keep_checkpoints;
  return j;
}

}  // namespace pdsan
