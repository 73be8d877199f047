#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgrl/policy.hpp"
#include "vgrl/reward_engine.hpp"

namespace vgrl {

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coeff = 0.04;
  double step_size = 1e-3;
  double std_floor = 1e-8;
  std::size_t inner_epochs = 1;

  void check() const;
};

struct StepStats {
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_kl = 0.0;    // against the reference, before the update
  double grad_norm = 0.0;  // first inner pass
  double objective = 0.0;  // first inner pass
};

struct GroupSample {
  Completion completion;
  double old_logprob = 0.0;
  RewardBreakdown reward;
  double advantage = 0.0;
};

struct GroupBatch {
  std::string video_id;
  std::vector<GroupSample> samples;
};

struct StepResult {
  PolicyParameters params;
  StepStats stats;
  GroupBatch batch;
};

class GroupTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalDivergence : public std::runtime_error {
 public:
  NumericalDivergence(const std::string& what, StepStats stats)
      : std::runtime_error(what), stats_(stats) {}
  [[nodiscard]] const StepStats& stats() const { return stats_; }

 private:
  StepStats stats_;
};

/// (r - mean) / max(population std, std_floor); all zeros for a constant group.
std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor);

/// exp(d) - d - 1 with d = logp_ref - logp_new. Non-negative pointwise.
double kl_estimate(double logp_new, double logp_ref);

/// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
double clipped_surrogate(double ratio, double advantage, double eps);

/// d clipped_surrogate / d ratio (0 on the clipped branch).
double clipped_surrogate_slope(double ratio, double advantage, double eps);

/// One GRPO update on one video: sample a group, score it against the
/// annotation, normalize rewards within the group and ascend the clipped
/// surrogate minus the KL penalty for `inner_epochs` passes.
StepResult grpo_step(const PolicyParameters& params, const PolicyParameters& ref,
                     const TrainingView& video, const PolicyInput& input, const GrpoConfig& cfg,
                     const RewardConfig& reward_cfg, const LabelSet& labels, std::uint64_t seed,
                     std::size_t threads = 1);

}  // namespace vgrl
