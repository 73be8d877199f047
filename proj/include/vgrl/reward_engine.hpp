#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vgrl/core_types.hpp"
#include "vgrl/structured_output.hpp"

namespace vgrl {

enum class GroundingMode { soft, strict };

std::string_view to_string(GroundingMode m);
GroundingMode grounding_mode_from_string(std::string_view s);

struct RewardWeights {
  double w_think = 1.0;
  double w_ground = 1.0;
  double w_iou = 1.0;
  double w_boundary = 0.5;
  double w_category = 1.0;

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// Per-stage boundary/IoU/category weights of the three-stage schedule.
struct StageAlphas {
  double a1 = 0.5;  // stage 1 boundary
  double a2 = 0.5;  // stage 2 boundary
  double a3 = 1.0;  // stage 3 iou
  double a4 = 0.5;  // stage 3 boundary
  double a5 = 1.0;  // stage 3 category
};

struct RewardConfig {
  double sigma = 5.0;
  double iou_threshold = 0.5;
  RewardWeights weights;
  GroundingMode grounding_mode = GroundingMode::strict;

  /// Preset for stage 1, 2 or 3 with the given alphas and format weights.
  static RewardConfig stage(int stage_id, const StageAlphas& alphas = {},
                            double w_think = 1.0, double w_ground = 1.0);

  /// Throws std::invalid_argument when sigma/threshold/weights are out of range.
  void check() const;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct RewardBreakdown {
  double r_think = 0.0;
  double r_ground_format = 0.0;
  double r_iou = 0.0;
  double r_boundary = 0.0;
  double r_category = 0.0;
  double total = 0.0;
  // Not serialized: set when the annotation was empty and the accuracy
  // rewards fell back to 0.
  bool empty_reference = false;
};

nlohmann::ordered_json to_json(const RewardBreakdown& b);

/// Mean over annotated categories of [union_iou(pred[c], ann[c]) > threshold].
double reward_iou(const SegmentSet& pred, const SegmentSet& ann, double threshold);

/// Greedy one-to-one matching by descending IoU; ties go to the earlier
/// annotated start, then the earlier predicted start. Zero-IoU pairs are never
/// matched. Result is ordered by annotation index.
std::vector<std::pair<std::size_t, std::size_t>> match_intervals(
    const std::vector<TimeInterval>& pred, const std::vector<TimeInterval>& ann);

/// exp(-sigma^2 [(dl)^2 + (dr)^2]) on duration-normalized boundaries, averaged
/// over annotated intervals (unmatched -> 0) and then over categories.
double reward_boundary(const SegmentSet& pred, const SegmentSet& ann, double sigma,
                       double duration);

/// Jaccard index of the category sets.
double reward_category(const SegmentSet& pred, const SegmentSet& ann);

/// Weighted sum of the five components.
double stage_total(const RewardConfig& cfg, const RewardBreakdown& components);

/// Validates, parses and scores one completion against the annotation.
RewardBreakdown score_completion(std::string_view text, const TrainingView& video,
                                 const RewardConfig& cfg, const LabelSet& labels);

}  // namespace vgrl
