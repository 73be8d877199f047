#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vgrl/evaluation.hpp"
#include "vgrl/grpo.hpp"

namespace vgrl {

enum class DataSelector { precise_only, coarse_only, full };

std::string_view to_string(DataSelector s);
DataSelector selector_from_string(std::string_view s);

struct StageConfig {
  int stage_id = 3;
  DataSelector selector = DataSelector::full;
  RewardConfig reward = RewardConfig::stage(3);
  std::size_t steps = 0;
  GrpoConfig grpo;
};

/// Precise-only / coarse-only / full stages with 3000/6000/3000 steps.
std::vector<StageConfig> default_schedule(const StageAlphas& alphas = {},
                                          const GrpoConfig& grpo = {});

/// Single stage-3 run over the full data with `steps` steps.
std::vector<StageConfig> single_stage_schedule(std::size_t steps, const StageAlphas& alphas = {},
                                               const GrpoConfig& grpo = {});

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Partition {
  std::vector<std::size_t> precise;  // indices into the input, input order
  std::vector<std::size_t> coarse;
};

Partition partition(const std::vector<TrainingView>& dataset);

/// Throws ScheduleError when a stage's selector and reward preset disagree
/// with its stage id. `ablation` relaxes the selector pairing.
void check_schedule(const std::vector<StageConfig>& stages, bool ablation = false);

struct StepRecord {
  std::size_t step = 0;  // global, 0-based
  int stage = 0;
  std::size_t stage_index = 0;
  std::string video_id;
  Tier tier = Tier::precise;
  std::uint64_t seed = 0;
  std::uint64_t ref_hash = 0;
  StepStats stats;
  std::vector<RewardBreakdown> rewards;
};

struct StageReport {
  StageConfig config;
  std::uint64_t ref_hash = 0;
  std::vector<StepRecord> steps;
  PolicyParameters params;  // at the end of the stage
  std::optional<EvalReport> eval_gt;
  std::optional<EvalReport> eval_ann;
};

struct ScheduleReport {
  std::vector<StageReport> stages;
  PolicyParameters final_params;
  bool diverged = false;
  std::string error;
};

struct ScheduleOptions {
  std::size_t threads = 1;
  bool ablation = false;
  const std::vector<AnnotatedVideo>* eval_set = nullptr;  // evaluated after each stage
  const LabelSet* labels = nullptr;                        // defaults to LabelSet::defaults()
  std::function<void(const StepRecord&)> on_step;
};

/// Runs the stages in order. Each stage snapshots the current parameters as
/// its GRPO reference and draws one video per step, round-robin over a
/// per-stage shuffle. A NumericalDivergence stops the run; the report keeps
/// everything completed so far and sets `diverged`.
ScheduleReport run_schedule(const std::vector<TrainingView>& dataset,
                            const std::vector<StageConfig>& stages, const PolicyParameters& init,
                            std::uint64_t seed, const ScheduleOptions& opts = {});

}  // namespace vgrl
