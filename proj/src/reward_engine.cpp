#include "vgrl/reward_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace vgrl {

std::string_view to_string(GroundingMode m) { return m == GroundingMode::soft ? "soft" : "strict"; }

GroundingMode grounding_mode_from_string(std::string_view s) {
  if (s == "soft") return GroundingMode::soft;
  if (s == "strict") return GroundingMode::strict;
  throw std::invalid_argument("unknown grounding mode: " + std::string(s));
}

RewardConfig RewardConfig::stage(int stage_id, const StageAlphas& alphas, double w_think,
                                 double w_ground) {
  RewardConfig cfg;
  cfg.weights.w_think = w_think;
  cfg.weights.w_ground = w_ground;
  switch (stage_id) {
    case 1:
      cfg.weights.w_iou = 1.0;
      cfg.weights.w_boundary = alphas.a1;
      cfg.weights.w_category = 1.0;
      break;
    case 2:
      cfg.weights.w_iou = 1.0;
      cfg.weights.w_boundary = alphas.a2;
      cfg.weights.w_category = 0.0;
      break;
    case 3:
      cfg.weights.w_iou = alphas.a3;
      cfg.weights.w_boundary = alphas.a4;
      cfg.weights.w_category = alphas.a5;
      break;
    default:
      throw std::invalid_argument("stage id must be 1, 2 or 3");
  }
  return cfg;
}

void RewardConfig::check() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be > 0");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw std::invalid_argument("iou_threshold must lie in (0, 1)");
  }
  for (double w : {weights.w_think, weights.w_ground, weights.w_iou, weights.w_boundary,
                   weights.w_category}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("reward weights must be >= 0");
  }
}

nlohmann::ordered_json to_json(const RewardBreakdown& b) {
  nlohmann::ordered_json j;
  j["r_think"] = b.r_think;
  j["r_ground_format"] = b.r_ground_format;
  j["r_iou"] = b.r_iou;
  j["r_boundary"] = b.r_boundary;
  j["r_category"] = b.r_category;
  j["total"] = b.total;
  return j;
}

double reward_iou(const SegmentSet& pred, const SegmentSet& ann, double threshold) {
  if (ann.empty()) return 0.0;
  double hits = 0.0;
  for (const auto& [c, ivs] : ann.entries()) {
    if (union_iou(pred.at(c), ivs) > threshold) hits += 1.0;
  }
  return hits / static_cast<double>(ann.num_categories());
}

std::vector<std::pair<std::size_t, std::size_t>> match_intervals(
    const std::vector<TimeInterval>& pred, const std::vector<TimeInterval>& ann) {
  struct Candidate {
    double iou;
    std::size_t p, a;
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t a = 0; a < ann.size(); ++a) {
      const double iou = interval_iou(pred[p], ann[a]);
      if (iou > 0.0) cands.push_back({iou, p, a});
    }
  }
  std::sort(cands.begin(), cands.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    if (ann[x.a].start != ann[y.a].start) return ann[x.a].start < ann[y.a].start;
    if (pred[x.p].start != pred[y.p].start) return pred[x.p].start < pred[y.p].start;
    return x.a != y.a ? x.a < y.a : x.p < y.p;
  });

  std::vector<bool> p_used(pred.size(), false), a_used(ann.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (p_used[c.p] || a_used[c.a]) continue;
    p_used[c.p] = a_used[c.a] = true;
    out.emplace_back(c.p, c.a);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second < y.second; });
  return out;
}

double reward_boundary(const SegmentSet& pred, const SegmentSet& ann, double sigma,
                       double duration) {
  if (ann.empty()) return 0.0;
  const double s2 = sigma * sigma;
  double total = 0.0;
  for (const auto& [c, ann_ivs] : ann.entries()) {
    const auto& pred_ivs = pred.at(c);
    double cat_sum = 0.0;
    for (const auto& [p, a] : match_intervals(pred_ivs, ann_ivs)) {
      const double dl = (pred_ivs[p].start - ann_ivs[a].start) / duration;
      const double dr = (pred_ivs[p].end - ann_ivs[a].end) / duration;
      cat_sum += std::exp(-s2 * (dl * dl + dr * dr));
    }
    total += cat_sum / static_cast<double>(ann_ivs.size());
  }
  return total / static_cast<double>(ann.num_categories());
}

double reward_category(const SegmentSet& pred, const SegmentSet& ann) {
  if (ann.empty()) return 0.0;
  std::set<CategoryId> uni;
  std::size_t inter = 0;
  for (const auto& [c, _] : ann.entries()) uni.insert(c);
  for (const auto& [c, _] : pred.entries()) {
    if (ann.contains(c)) ++inter;
    uni.insert(c);
  }
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

double stage_total(const RewardConfig& cfg, const RewardBreakdown& b) {
  const auto& w = cfg.weights;
  return w.w_think * b.r_think + w.w_ground * b.r_ground_format + w.w_iou * b.r_iou +
         w.w_boundary * b.r_boundary + w.w_category * b.r_category;
}

RewardBreakdown score_completion(std::string_view text, const TrainingView& video,
                                 const RewardConfig& cfg, const LabelSet& labels) {
  const FormatVerdict v = validate(text, labels);
  const bool grounded =
      cfg.grounding_mode == GroundingMode::strict ? v.grounding_strict_ok : v.grounding_soft_ok;

  RewardBreakdown b;
  b.r_think = v.thinking_ok ? 1.0 : 0.0;
  b.r_ground_format = grounded ? 1.0 : 0.0;
  const SegmentSet& ann = video.annotation();
  b.empty_reference = ann.empty();
  if (grounded && v.parse) {
    const SegmentSet& pred = v.parse->predictions;
    b.r_iou = reward_iou(pred, ann, cfg.iou_threshold);
    b.r_boundary = reward_boundary(pred, ann, cfg.sigma, video.duration());
    b.r_category = reward_category(pred, ann);
  }
  b.total = stage_total(cfg, b);
  return b;
}

}  // namespace vgrl
