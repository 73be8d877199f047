#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "vgrl/experiment.hpp"
#include "vgrl/run_config.hpp"

using namespace vgrl;

TEST_CASE("config round trips through JSON") {
  RunConfig c;
  c.seed = 77;
  c.threads = 3;
  c.world.num_videos = 12;
  c.world.noise.coarse_jitter_frac = 0.2;
  c.stages[1].steps = 5;
  c.stages[2].reward.sigma = 3.0;
  c.stages[0].grpo.kl_coeff = 0.0;
  const auto j = to_json(c);
  const auto back = run_config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"sed": 1})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"stages": [{"stage": 4}]})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"stages": [{"stage": 1, "grpo": {"group_size": 1}}]})")),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"stages": []})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"world": {"bins": "x"}})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"stages": [{"stage": 2, "grounding_mode": "loose"}]})")),
                  ConfigError);
}

TEST_CASE("a stage entry fills in its preset") {
  const auto c = run_config_from_json(nlohmann::json::parse(R"({"stages": [{"stage": 2, "steps": 4}]})"));
  REQUIRE(c.stages.size() == 1);
  CHECK(c.stages[0].selector == DataSelector::coarse_only);
  CHECK(c.stages[0].reward.weights.w_category == 0.0);
  CHECK(c.stages[0].steps == 4);
}

TEST_CASE("ablations") {
  RunConfig c;
  const auto total = c.total_steps();
  c.apply_ablation("no-curriculum");
  REQUIRE(c.stages.size() == 1);
  CHECK(c.stages[0].stage_id == 3);
  CHECK(c.stages[0].selector == DataSelector::full);
  CHECK(c.total_steps() == total);

  RunConfig nb;
  nb.apply_ablation("no-boundary");
  for (const auto& s : nb.stages) CHECK(s.reward.weights.w_boundary == 0.0);

  RunConfig soft;
  soft.set_grounding_mode(GroundingMode::soft);
  for (const auto& s : soft.stages) CHECK(s.reward.grounding_mode == GroundingMode::soft);

  CHECK_THROWS_AS(RunConfig{}.apply_ablation("no-reward"), ConfigError);
}

TEST_CASE("run_training writes a self-describing run directory") {
  RunConfig c;
  c.seed = 4;
  for (auto& s : c.stages) s.steps = 3;
  auto w = vgrl::testing::small_world(6, 20);
  const auto data = generate_dataset(w);
  const auto dir = std::filesystem::temp_directory_path() / "vgrl_test_run";
  std::filesystem::remove_all(dir);
  const auto out = run_training(c, data, data, LabelSet::defaults(), dir);
  for (const char* f : {"config.json", "stats.jsonl", "rewards.jsonl", "stage1.ckpt", "stage2.ckpt", "stage3.ckpt",
                        "eval_gt.json", "eval_ann.json", "table.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream stats(dir / "stats.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(stats, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.size() == 6);
    CHECK(j.contains("mean_kl"));
    ++n;
  }
  CHECK(n == 9);
  CHECK(read_checkpoint(dir / "stage3.ckpt") == out.schedule.final_params);
  std::ifstream cfg(dir / "config.json");
  const auto reloaded = run_config_from_json(nlohmann::json::parse(cfg));
  CHECK(to_json(reloaded).dump() == to_json(c).dump());
  std::filesystem::remove_all(dir);
}
