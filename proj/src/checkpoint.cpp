#include "pdsan/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace pdsan {

namespace {

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string("checkpoint is missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

json tensor_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix tensor_from_json(const json& j, const std::string& name) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw std::runtime_error("tensor " + name + " needs rows, cols and data");
  }
  const auto rows = j["rows"].get<Eigen::Index>();
  const auto cols = j["cols"].get<Eigen::Index>();
  const auto data = j["data"].get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::runtime_error("tensor " + name + " has " + std::to_string(data.size()) + " values, expected " +
                             std::to_string(rows * cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  }
  return m;
}

json tensors_to_json(const ParameterSet& params) {
  json j = json::object();
  for (const auto& e : params) j[e.name] = tensor_to_json(e.value);
  return j;
}

void tensors_from_json(const json& j, ParameterSet& layout) {
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const std::string& name = layout.name(i);
    if (!j.contains(name)) throw std::runtime_error("checkpoint lacks tensor " + name);
    Matrix m = tensor_from_json(j[name], name);
    if (m.rows() != layout[i].rows() || m.cols() != layout[i].cols()) {
      throw std::runtime_error("checkpoint tensor " + name + " has the wrong shape");
    }
    layout[i] = std::move(m);
  }
  if (j.size() != layout.size()) throw std::runtime_error("checkpoint holds unexpected tensors");
}

json to_json(const SpikingActorConfig& c) {
  json dn = {{"theta_a", c.dn.theta_a}, {"theta_b", c.dn.theta_b}, {"theta_c", c.dn.theta_c},
             {"theta_d", c.dn.theta_d}, {"v_th", c.dn.v_th},       {"d_c", c.dn.d_c}};
  dn["v_clamp"] = c.dn.v_clamp ? json(*c.dn.v_clamp) : json(nullptr);
  return {{"state_dim", c.state_dim},
          {"action_dim", c.action_dim},
          {"hidden", c.hidden},
          {"pop_size", c.pop_size},
          {"out_pop_size", c.out_pop_size},
          {"time_window", c.time_window},
          {"input_coding", std::string(to_string(c.coding))},
          {"neuron_type", std::string(to_string(c.neuron))},
          {"dn", dn},
          {"lif", {{"d_c", c.lif.d_c}, {"v_f", c.lif.v_f}, {"v_th", c.lif.v_th}}},
          {"surrogate_window", c.surrogate_window},
          {"det_delta", c.det_delta},
          {"learnable_theta", c.learnable_theta},
          {"full_recovery_grad", c.full_recovery_grad},
          {"theta_clamp", c.theta_clamp},
          {"obs_low", to_std(c.obs_low)},
          {"obs_high", to_std(c.obs_high)}};
}

SpikingActorConfig spiking_config_from_json(const json& j) {
  SpikingActorConfig c;
  c.state_dim = field(j, "state_dim").get<int>();
  c.action_dim = field(j, "action_dim").get<int>();
  c.hidden = field(j, "hidden").get<std::vector<int>>();
  c.pop_size = field(j, "pop_size").get<int>();
  c.out_pop_size = field(j, "out_pop_size").get<int>();
  c.time_window = field(j, "time_window").get<int>();
  c.coding = parse_input_coding(field(j, "input_coding").get<std::string>());
  c.neuron = parse_neuron_type(field(j, "neuron_type").get<std::string>());
  const json& dn = field(j, "dn");
  c.dn.theta_a = field(dn, "theta_a").get<double>();
  c.dn.theta_b = field(dn, "theta_b").get<double>();
  c.dn.theta_c = field(dn, "theta_c").get<double>();
  c.dn.theta_d = field(dn, "theta_d").get<double>();
  c.dn.v_th = field(dn, "v_th").get<double>();
  c.dn.d_c = field(dn, "d_c").get<double>();
  if (dn.contains("v_clamp") && !dn["v_clamp"].is_null()) c.dn.v_clamp = dn["v_clamp"].get<double>();
  const json& lif = field(j, "lif");
  c.lif.d_c = field(lif, "d_c").get<double>();
  c.lif.v_f = field(lif, "v_f").get<double>();
  c.lif.v_th = field(lif, "v_th").get<double>();
  c.surrogate_window = field(j, "surrogate_window").get<double>();
  c.det_delta = field(j, "det_delta").get<double>();
  c.learnable_theta = field(j, "learnable_theta").get<bool>();
  c.full_recovery_grad = field(j, "full_recovery_grad").get<bool>();
  c.theta_clamp = field(j, "theta_clamp").get<double>();
  c.obs_low = vector_from_json(field(j, "obs_low"));
  c.obs_high = vector_from_json(field(j, "obs_high"));
  return c;
}

json to_json(const MlpActorConfig& c) {
  return {{"state_dim", c.state_dim},       {"action_dim", c.action_dim}, {"hidden", c.hidden},
          {"population", c.population},     {"pop_size", c.pop_size},     {"out_pop_size", c.out_pop_size},
          {"obs_low", to_std(c.obs_low)},   {"obs_high", to_std(c.obs_high)}};
}

MlpActorConfig mlp_config_from_json(const json& j) {
  MlpActorConfig c;
  c.state_dim = field(j, "state_dim").get<int>();
  c.action_dim = field(j, "action_dim").get<int>();
  c.hidden = field(j, "hidden").get<std::vector<int>>();
  c.population = field(j, "population").get<bool>();
  c.pop_size = field(j, "pop_size").get<int>();
  c.out_pop_size = field(j, "out_pop_size").get<int>();
  c.obs_low = vector_from_json(field(j, "obs_low"));
  c.obs_high = vector_from_json(field(j, "obs_high"));
  return c;
}

json policy_to_json(const Policy& policy) {
  if (const auto* sp = dynamic_cast<const SpikingPolicy*>(&policy)) {
    return {{"kind", "spiking"}, {"config", to_json(sp->actor().config())}, {"tensors", tensors_to_json(sp->params())}};
  }
  if (const auto* mp = dynamic_cast<const MlpPolicy*>(&policy)) {
    return {{"kind", "mlp"}, {"config", to_json(mp->config())}, {"tensors", tensors_to_json(mp->params())}};
  }
  throw std::invalid_argument("policy_to_json: unsupported policy type");
}

std::unique_ptr<Policy> policy_from_json(const json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "spiking") {
    SpikingActorConfig cfg = spiking_config_from_json(field(j, "config"));
    Rng unused(0);
    SpikingActor fresh(cfg, unused);
    tensors_from_json(field(j, "tensors"), fresh.params());
    return std::make_unique<SpikingPolicy>(SpikingActor(cfg, fresh.params()));
  }
  if (kind == "mlp") {
    MlpActorConfig cfg = mlp_config_from_json(field(j, "config"));
    Rng unused(0);
    MlpPolicy fresh(cfg, unused);
    tensors_from_json(field(j, "tensors"), fresh.params());
    return std::make_unique<MlpPolicy>(std::move(fresh));
  }
  throw std::runtime_error("checkpoint has unknown actor kind '" + kind + "'");
}

json adam_to_json(const Adam& opt) {
  return {{"steps", opt.steps()},
          {"lr", opt.config().lr},
          {"m", tensors_to_json(opt.first_moment())},
          {"v", tensors_to_json(opt.second_moment())}};
}

void adam_from_json(const json& j, Adam& opt) {
  opt.set_steps(field(j, "steps").get<long long>());
  tensors_from_json(field(j, "m"), opt.first_moment());
  tensors_from_json(field(j, "v"), opt.second_moment());
}

namespace {

json critic_to_json(const Critic& c) {
  std::vector<int> hidden(c.net().spec().sizes.begin() + 1, c.net().spec().sizes.end() - 1);
  return {{"state_dim", c.state_dim()}, {"action_dim", c.action_dim()}, {"hidden", hidden},
          {"tensors", tensors_to_json(c.params())}};
}

Critic critic_from_json(const json& j) {
  Rng unused(0);
  Critic c(field(j, "state_dim").get<int>(), field(j, "action_dim").get<int>(),
           field(j, "hidden").get<std::vector<int>>(), unused);
  tensors_from_json(field(j, "tensors"), c.params());
  return c;
}

}  // namespace

json agent_to_json(const Td3Agent& a) {
  return {{"actor", policy_to_json(*a.actor)},
          {"actor_target", policy_to_json(*a.actor_target)},
          {"critic1", critic_to_json(a.critic1)},
          {"critic2", critic_to_json(a.critic2)},
          {"critic1_target", critic_to_json(a.critic1_target)},
          {"critic2_target", critic_to_json(a.critic2_target)},
          {"optimizers",
           {{"actor", adam_to_json(a.actor_opt)},
            {"critic1", adam_to_json(a.critic1_opt)},
            {"critic2", adam_to_json(a.critic2_opt)}}}};
}

Td3Agent agent_from_json(const json& j, const Td3Config& cfg) {
  Td3Agent a;
  a.actor = policy_from_json(field(j, "actor"));
  a.actor_target = policy_from_json(field(j, "actor_target"));
  a.critic1 = critic_from_json(field(j, "critic1"));
  a.critic2 = critic_from_json(field(j, "critic2"));
  a.critic1_target = critic_from_json(field(j, "critic1_target"));
  a.critic2_target = critic_from_json(field(j, "critic2_target"));
  a.actor_opt = Adam(a.actor->params(), AdamConfig{cfg.actor_lr});
  a.critic1_opt = Adam(a.critic1.params(), AdamConfig{cfg.critic_lr});
  a.critic2_opt = Adam(a.critic2.params(), AdamConfig{cfg.critic_lr});
  const json& opts = field(j, "optimizers");
  adam_from_json(field(opts, "actor"), a.actor_opt);
  adam_from_json(field(opts, "critic1"), a.critic1_opt);
  adam_from_json(field(opts, "critic2"), a.critic2_opt);
  return a;
}

void save_json(const std::filesystem::path& path, const json& j) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace pdsan
