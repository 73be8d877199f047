#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vgrl/curriculum.hpp"
#include "vgrl/evaluation.hpp"
#include "vgrl/run_config.hpp"

namespace vgrl {

struct TrainOutcome {
  ScheduleReport schedule;
  EvalReport eval_gt;   // empty when schedule.diverged
  EvalReport eval_ann;
};

/// Initial parameters for a run: Gaussian weights with std `init_scale`.
PolicyParameters initial_parameters(const RunConfig& cfg, const LabelSet& labels,
                                    std::size_t raw_features);

/// Runs the configured schedule on `train` and evaluates the final policy on
/// `eval` against both references. With `out_dir`, writes config.json,
/// stats.jsonl, rewards.jsonl, stage{k}.ckpt, eval_gt.json, eval_ann.json and
/// table.csv; stats are streamed so a diverged run keeps its partial log.
/// After a divergence only completed stages are checkpointed and the final
/// reports are left empty.
TrainOutcome run_training(const RunConfig& cfg, const std::vector<AnnotatedVideo>& train,
                          const std::vector<AnnotatedVideo>& eval, const LabelSet& labels,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Pretty JSON text exactly as written into run directories.
std::string report_text(const EvalReport& r);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vgrl
