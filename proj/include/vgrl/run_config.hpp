#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vgrl/curriculum.hpp"
#include "vgrl/synthetic_world.hpp"

namespace vgrl {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything that determines a training run. Serialized as config.json in
/// the run directory; loading that file reproduces the run.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string data;       // training dataset (JSONL); empty -> generate from `world`
  std::string eval_data;  // evaluation dataset; empty -> same as training data
  std::size_t threads = 1;
  double init_scale = 0.01;
  double temperature = 1.0;
  std::string ablation = "none";
  WorldSpec world;
  std::vector<StageConfig> stages = default_schedule();

  /// "none", "no-curriculum" (one stage-3 run over the full data with the
  /// same total step budget) or "no-boundary" (w_boundary = 0 everywhere).
  void apply_ablation(const std::string& name);
  void set_grounding_mode(GroundingMode m);
  [[nodiscard]] std::size_t total_steps() const;
};

nlohmann::ordered_json to_json(const WorldSpec& w);
WorldSpec world_spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const StageConfig& s);
StageConfig stage_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const RunConfig& c);

/// Missing keys keep their defaults; unknown keys throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace vgrl
