#include "vgrl/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace vgrl {

bool TimeInterval::valid() const {
  return std::isfinite(start) && std::isfinite(end) && start >= 0.0 && start <= end;
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) throw std::invalid_argument("duplicate label: " + names_[i]);
    }
  }
}

const LabelSet& LabelSet::defaults() {
  static const LabelSet labels({"DiscomfortingContent", "MarketingExaggeration",
                                "RequiringCredentialReview", "VulgarContent",
                                "ProhibitedGoodsServices", "Normal"});
  return labels;
}

CategoryId LabelSet::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return static_cast<CategoryId>(it - names_.begin());
}

std::vector<CategoryId> LabelSet::violation_ids() const {
  std::vector<CategoryId> out;
  const CategoryId n = normal();
  for (CategoryId c = 0; c < size(); ++c) {
    if (c != n) out.push_back(c);
  }
  return out;
}

void SegmentSet::add(CategoryId c, TimeInterval iv) {
  if (!iv.valid()) {
    throw InvalidInterval("invalid interval [" + std::to_string(iv.start) + ", " +
                          std::to_string(iv.end) + "]");
  }
  entries_[c].push_back(iv);
}

const std::vector<TimeInterval>& SegmentSet::at(CategoryId c) const {
  static const std::vector<TimeInterval> none;
  auto it = entries_.find(c);
  return it == entries_.end() ? none : it->second;
}

std::vector<CategoryId> SegmentSet::categories() const {
  std::vector<CategoryId> out;
  out.reserve(entries_.size());
  for (const auto& [c, _] : entries_) out.push_back(c);
  return out;
}

void SegmentSet::normalize() {
  for (auto& [_, ivs] : entries_) {
    std::sort(ivs.begin(), ivs.end(), [](const TimeInterval& a, const TimeInterval& b) {
      return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
  }
}

bool SegmentSet::within(double duration) const {
  for (const auto& [_, ivs] : entries_) {
    if (ivs.empty()) return false;
    for (const auto& iv : ivs) {
      if (!iv.valid() || iv.end > duration) return false;
    }
  }
  return true;
}

std::string_view to_string(Tier t) { return t == Tier::precise ? "precise" : "coarse"; }

Tier tier_from_string(std::string_view s) {
  if (s == "precise") return Tier::precise;
  if (s == "coarse") return Tier::coarse;
  throw std::invalid_argument("unknown tier: " + std::string(s));
}

bool AnnotatedVideo::valid() const {
  return std::isfinite(duration) && duration > 0.0 && bins.bins() >= 1 &&
         bins.features() >= 1 && ground_truth.within(duration) && annotation.within(duration);
}

double interval_iou(const TimeInterval& a, const TimeInterval& b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

std::vector<TimeInterval> coalesce(std::vector<TimeInterval> ivs) {
  std::sort(ivs.begin(), ivs.end(), [](const TimeInterval& a, const TimeInterval& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  std::vector<TimeInterval> out;
  for (const auto& iv : ivs) {
    if (!out.empty() && iv.start <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

double measure(const std::vector<TimeInterval>& coalesced) {
  double m = 0.0;
  for (const auto& iv : coalesced) m += iv.length();
  return m;
}

namespace {

double intersection_measure(const std::vector<TimeInterval>& a, const std::vector<TimeInterval>& b) {
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].start, b[j].start);
    const double hi = std::min(a[i].end, b[j].end);
    if (hi > lo) total += hi - lo;
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return total;
}

}  // namespace

double union_iou(const std::vector<TimeInterval>& pred, const std::vector<TimeInterval>& ann) {
  if (pred.empty() || ann.empty()) return 0.0;
  const auto p = coalesce(pred);
  const auto a = coalesce(ann);
  const double inter = intersection_measure(p, a);
  const double uni = measure(p) + measure(a) - inter;
  if (uni <= 0.0) return p == a ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace vgrl
