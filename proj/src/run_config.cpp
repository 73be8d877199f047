#include "vgrl/run_config.hpp"

#include <algorithm>
#include <initializer_list>
#include <set>

namespace vgrl {

namespace {

using ojson = nlohmann::ordered_json;

void require_known(const nlohmann::json& j, std::initializer_list<const char*> keys,
                   const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

ojson to_json(const RewardWeights& w) {
  ojson j;
  j["w_think"] = w.w_think;
  j["w_ground"] = w.w_ground;
  j["w_iou"] = w.w_iou;
  j["w_boundary"] = w.w_boundary;
  j["w_category"] = w.w_category;
  return j;
}

ojson to_json(const GrpoConfig& g) {
  ojson j;
  j["group_size"] = g.group_size;
  j["clip_epsilon"] = g.clip_epsilon;
  j["kl_coeff"] = g.kl_coeff;
  j["step_size"] = g.step_size;
  j["std_floor"] = g.std_floor;
  j["inner_epochs"] = g.inner_epochs;
  return j;
}

}  // namespace

void RunConfig::apply_ablation(const std::string& name) {
  if (name == "none") {
  } else if (name == "no-curriculum") {
    const std::size_t steps = total_steps();
    auto it = std::find_if(stages.begin(), stages.end(), [](const StageConfig& s) { return s.stage_id == 3; });
    StageConfig single = it != stages.end() ? *it : single_stage_schedule(0).front();
    single.selector = DataSelector::full;
    single.steps = steps;
    stages = {single};
  } else if (name == "no-boundary") {
    for (auto& s : stages) s.reward.weights.w_boundary = 0.0;
  } else {
    throw ConfigError("unknown ablation '" + name + "' (expected none, no-curriculum, no-boundary)");
  }
  ablation = name;
}

void RunConfig::set_grounding_mode(GroundingMode m) {
  for (auto& s : stages) s.reward.grounding_mode = m;
}

std::size_t RunConfig::total_steps() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.steps;
  return n;
}

ojson to_json(const WorldSpec& w) {
  ojson j;
  j["labels"] = w.labels.names();
  j["num_videos"] = w.num_videos;
  j["duration_min"] = w.duration_min;
  j["duration_max"] = w.duration_max;
  j["bins"] = w.bins;
  j["features"] = w.features;
  j["max_segments"] = w.max_segments;
  j["segment_min_frac"] = w.segment_min_frac;
  j["segment_max_frac"] = w.segment_max_frac;
  j["category_weights"] = w.category_weights;
  j["precise_jitter_frac"] = w.noise.precise_jitter_frac;
  j["coarse_jitter_frac"] = w.noise.coarse_jitter_frac;
  j["category_flip_prob_coarse"] = w.noise.category_flip_prob_coarse;
  j["feature_snr"] = w.feature_snr;
  j["coarse_fraction"] = w.coarse_fraction;
  j["seed"] = w.seed;
  return j;
}

WorldSpec world_spec_from_json(const nlohmann::json& j) {
  const std::string where = "world";
  require_known(j, {"labels", "num_videos", "duration_min", "duration_max", "bins", "features",
                    "max_segments", "segment_min_frac", "segment_max_frac", "category_weights",
                    "precise_jitter_frac", "coarse_jitter_frac", "category_flip_prob_coarse",
                    "feature_snr", "coarse_fraction", "seed"},
                where);
  WorldSpec w;
  if (j.contains("labels")) {
    std::vector<std::string> names;
    read(j, "labels", names, where);
    w.labels = LabelSet(std::move(names));
  }
  read(j, "num_videos", w.num_videos, where);
  read(j, "duration_min", w.duration_min, where);
  read(j, "duration_max", w.duration_max, where);
  read(j, "bins", w.bins, where);
  read(j, "features", w.features, where);
  read(j, "max_segments", w.max_segments, where);
  read(j, "segment_min_frac", w.segment_min_frac, where);
  read(j, "segment_max_frac", w.segment_max_frac, where);
  read(j, "category_weights", w.category_weights, where);
  read(j, "precise_jitter_frac", w.noise.precise_jitter_frac, where);
  read(j, "coarse_jitter_frac", w.noise.coarse_jitter_frac, where);
  read(j, "category_flip_prob_coarse", w.noise.category_flip_prob_coarse, where);
  read(j, "feature_snr", w.feature_snr, where);
  read(j, "coarse_fraction", w.coarse_fraction, where);
  read(j, "seed", w.seed, where);
  try {
    w.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("world: ") + e.what());
  }
  return w;
}

ojson to_json(const StageConfig& s) {
  ojson j;
  j["stage"] = s.stage_id;
  j["selector"] = std::string(to_string(s.selector));
  j["steps"] = s.steps;
  j["weights"] = to_json(s.reward.weights);
  j["sigma"] = s.reward.sigma;
  j["iou_threshold"] = s.reward.iou_threshold;
  j["grounding_mode"] = std::string(to_string(s.reward.grounding_mode));
  j["grpo"] = to_json(s.grpo);
  return j;
}

StageConfig stage_config_from_json(const nlohmann::json& j) {
  std::string where = "stages[]";
  require_known(j, {"stage", "selector", "steps", "weights", "sigma", "iou_threshold",
                    "grounding_mode", "grpo"},
                where);
  StageConfig s;
  read(j, "stage", s.stage_id, where);
  if (s.stage_id < 1 || s.stage_id > 3) throw ConfigError(where + ".stage must be 1, 2 or 3");
  s.selector = s.stage_id == 1 ? DataSelector::precise_only
               : s.stage_id == 2 ? DataSelector::coarse_only
                                 : DataSelector::full;
  s.reward = RewardConfig::stage(s.stage_id);
  if (j.contains("selector")) {
    try {
      s.selector = selector_from_string(j.at("selector").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(where + ".selector: " + e.what());
    }
  }
  read(j, "steps", s.steps, where);
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    require_known(w, {"w_think", "w_ground", "w_iou", "w_boundary", "w_category"}, where + ".weights");
    read(w, "w_think", s.reward.weights.w_think, where);
    read(w, "w_ground", s.reward.weights.w_ground, where);
    read(w, "w_iou", s.reward.weights.w_iou, where);
    read(w, "w_boundary", s.reward.weights.w_boundary, where);
    read(w, "w_category", s.reward.weights.w_category, where);
  }
  read(j, "sigma", s.reward.sigma, where);
  read(j, "iou_threshold", s.reward.iou_threshold, where);
  if (j.contains("grounding_mode")) {
    try {
      s.reward.grounding_mode = grounding_mode_from_string(j.at("grounding_mode").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(where + ".grounding_mode: " + e.what());
    }
  }
  if (j.contains("grpo")) {
    const auto& g = j.at("grpo");
    const std::string gw = where + ".grpo";
    require_known(g, {"group_size", "clip_epsilon", "kl_coeff", "step_size", "std_floor", "inner_epochs"}, gw);
    read(g, "group_size", s.grpo.group_size, gw);
    read(g, "clip_epsilon", s.grpo.clip_epsilon, gw);
    read(g, "kl_coeff", s.grpo.kl_coeff, gw);
    read(g, "step_size", s.grpo.step_size, gw);
    read(g, "std_floor", s.grpo.std_floor, gw);
    read(g, "inner_epochs", s.grpo.inner_epochs, gw);
  }
  try {
    s.reward.check();
    s.grpo.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

ojson to_json(const RunConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["data"] = c.data;
  j["eval_data"] = c.eval_data;
  j["threads"] = c.threads;
  j["init_scale"] = c.init_scale;
  j["temperature"] = c.temperature;
  j["ablation"] = c.ablation;
  j["world"] = to_json(c.world);
  auto stages = ojson::array();
  for (const auto& s : c.stages) stages.push_back(to_json(s));
  j["stages"] = std::move(stages);
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  const std::string where = "config";
  require_known(j, {"seed", "data", "eval_data", "threads", "init_scale", "temperature", "ablation",
                    "world", "stages"},
                where);
  RunConfig c;
  read(j, "seed", c.seed, where);
  read(j, "data", c.data, where);
  read(j, "eval_data", c.eval_data, where);
  read(j, "threads", c.threads, where);
  read(j, "init_scale", c.init_scale, where);
  read(j, "temperature", c.temperature, where);
  read(j, "ablation", c.ablation, where);
  if (j.contains("world")) c.world = world_spec_from_json(j.at("world"));
  if (j.contains("stages")) {
    const auto& arr = j.at("stages");
    if (!arr.is_array() || arr.empty()) throw ConfigError("config.stages must be a non-empty array");
    c.stages.clear();
    for (const auto& s : arr) c.stages.push_back(stage_config_from_json(s));
  }
  if (!(c.init_scale >= 0.0)) throw ConfigError("config.init_scale must be >= 0");
  if (!(c.temperature > 0.0)) throw ConfigError("config.temperature must be > 0");
  return c;
}

}  // namespace vgrl
