#include "vgrl/curriculum.hpp"

#include <algorithm>
#include <random>

#include "vgrl/synthetic_world.hpp"

namespace vgrl {

std::string_view to_string(DataSelector s) {
  switch (s) {
    case DataSelector::precise_only: return "precise_only";
    case DataSelector::coarse_only: return "coarse_only";
    case DataSelector::full: return "full";
  }
  return "?";
}

DataSelector selector_from_string(std::string_view s) {
  if (s == "precise_only") return DataSelector::precise_only;
  if (s == "coarse_only") return DataSelector::coarse_only;
  if (s == "full") return DataSelector::full;
  throw std::invalid_argument("unknown data selector: " + std::string(s));
}

std::vector<StageConfig> default_schedule(const StageAlphas& alphas, const GrpoConfig& grpo) {
  return {
      {1, DataSelector::precise_only, RewardConfig::stage(1, alphas), 3000, grpo},
      {2, DataSelector::coarse_only, RewardConfig::stage(2, alphas), 6000, grpo},
      {3, DataSelector::full, RewardConfig::stage(3, alphas), 3000, grpo},
  };
}

std::vector<StageConfig> single_stage_schedule(std::size_t steps, const StageAlphas& alphas,
                                               const GrpoConfig& grpo) {
  return {{3, DataSelector::full, RewardConfig::stage(3, alphas), steps, grpo}};
}

Partition partition(const std::vector<TrainingView>& dataset) {
  Partition p;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].tier() == Tier::precise ? p.precise : p.coarse).push_back(i);
  }
  return p;
}

void check_schedule(const std::vector<StageConfig>& stages, bool ablation) {
  if (stages.empty()) throw ScheduleError("schedule has no stages");
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& s = stages[k];
    const std::string where = "stage " + std::to_string(k + 1) + " (id " + std::to_string(s.stage_id) + ")";
    if (s.stage_id < 1 || s.stage_id > 3) throw ScheduleError(where + ": stage id must be 1, 2 or 3");
    try {
      s.reward.check();
      s.grpo.check();
    } catch (const std::invalid_argument& e) {
      throw ScheduleError(where + ": " + e.what());
    }
    if (ablation) continue;
    static constexpr DataSelector expected[] = {DataSelector::precise_only, DataSelector::coarse_only,
                                                DataSelector::full};
    if (s.selector != expected[s.stage_id - 1]) {
      throw ScheduleError(where + ": selector " + std::string(to_string(s.selector)) +
                          " does not match the stage");
    }
    // Accuracy-weight shape of each stage preset; stage 3 is free.
    const auto& w = s.reward.weights;
    if (s.stage_id == 1 && (w.w_iou != 1.0 || w.w_category != 1.0)) {
      throw ScheduleError(where + ": stage 1 requires w_iou = w_category = 1");
    }
    if (s.stage_id == 2 && (w.w_iou != 1.0 || w.w_category != 0.0)) {
      throw ScheduleError(where + ": stage 2 requires w_iou = 1 and w_category = 0");
    }
  }
}

ScheduleReport run_schedule(const std::vector<TrainingView>& dataset,
                            const std::vector<StageConfig>& stages, const PolicyParameters& init,
                            std::uint64_t seed, const ScheduleOptions& opts) {
  check_schedule(stages, opts.ablation);
  const LabelSet& labels = opts.labels ? *opts.labels : LabelSet::defaults();
  const Partition parts = partition(dataset);

  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<const std::vector<std::size_t>*> pools;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto sel = stages[k].selector;
    const auto* pool = sel == DataSelector::precise_only ? &parts.precise
                       : sel == DataSelector::coarse_only ? &parts.coarse
                                                          : &all;
    if (pool->empty()) {
      throw ScheduleError("stage " + std::to_string(k + 1) + " selects " +
                          std::string(to_string(sel)) + " but that subset is empty");
    }
    pools.push_back(pool);
  }

  std::vector<PolicyInput> inputs;
  inputs.reserve(dataset.size());
  for (const auto& v : dataset) inputs.push_back(make_policy_input(v.bins(), v.duration()));

  ScheduleReport report;
  PolicyParameters params = init;
  std::size_t global_step = 0;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const StageConfig& stage = stages[k];
    StageReport sr;
    sr.config = stage;
    const PolicyParameters ref = params;
    sr.ref_hash = ref.hash();

    std::mt19937_64 shuffler(derive_seed(seed, 0x5354414745ULL + k));
    std::vector<std::size_t> order = *pools[k];
    std::size_t cursor = order.size();
    for (std::size_t s = 0; s < stage.steps; ++s, ++global_step) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffler);
        cursor = 0;
      }
      const std::size_t vi = order[cursor++];
      StepRecord rec;
      rec.step = global_step;
      rec.stage = stage.stage_id;
      rec.stage_index = k;
      rec.video_id = dataset[vi].video_id();
      rec.tier = dataset[vi].tier();
      rec.seed = derive_seed(seed, global_step);
      rec.ref_hash = ref.hash();
      try {
        auto res = grpo_step(params, ref, dataset[vi], inputs[vi], stage.grpo, stage.reward, labels,
                             rec.seed, opts.threads);
        params = std::move(res.params);
        rec.stats = res.stats;
        rec.rewards.reserve(res.batch.samples.size());
        for (const auto& smp : res.batch.samples) rec.rewards.push_back(smp.reward);
      } catch (const NumericalDivergence& e) {
        rec.stats = e.stats();
        sr.steps.push_back(std::move(rec));
        sr.params = params;
        report.stages.push_back(std::move(sr));
        report.final_params = params;
        report.diverged = true;
        report.error = e.what();
        return report;
      }
      if (opts.on_step) opts.on_step(rec);
      sr.steps.push_back(std::move(rec));
    }
    sr.params = params;
    if (opts.eval_set) {
      sr.eval_gt = evaluate(params, *opts.eval_set, labels, Reference::ground_truth,
                            DecodeMode::greedy, seed, opts.threads);
      sr.eval_ann = evaluate(params, *opts.eval_set, labels, Reference::annotation,
                             DecodeMode::greedy, seed, opts.threads);
    }
    report.stages.push_back(std::move(sr));
  }
  report.final_params = params;
  return report;
}

}  // namespace vgrl
