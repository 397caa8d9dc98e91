#pragma once

#include "pdsan/policy.hpp"
#include "pdsan/td3.hpp"

#include "json.hpp"

#include <filesystem>
#include <memory>

namespace pdsan {

using json = nlohmann::json;

/// {"rows": r, "cols": c, "data": [row-major values]}. Doubles are written
/// in shortest round-trip form, so save -> load is bit-exact.
json tensor_to_json(const Matrix& m);
Matrix tensor_from_json(const json& j, const std::string& name);

json tensors_to_json(const ParameterSet& params);
/// Overwrites every tensor of `layout` by name; missing tensors or shape
/// mismatches throw std::runtime_error.
void tensors_from_json(const json& j, ParameterSet& layout);

json to_json(const SpikingActorConfig& c);
SpikingActorConfig spiking_config_from_json(const json& j);
json to_json(const MlpActorConfig& c);
MlpActorConfig mlp_config_from_json(const json& j);

/// {"kind": ..., "config": {...}, "tensors": {...}}
json policy_to_json(const Policy& policy);
std::unique_ptr<Policy> policy_from_json(const json& j);

json adam_to_json(const Adam& opt);
void adam_from_json(const json& j, Adam& opt);

/// Full training state except the replay buffer.
json agent_to_json(const Td3Agent& agent);
Td3Agent agent_from_json(const json& j, const Td3Config& cfg);

void save_json(const std::filesystem::path& path, const json& j);
json load_json(const std::filesystem::path& path);

}  // namespace pdsan
