#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vgrl {

/// Closed interval [start, end] on a video timeline, in seconds.
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  [[nodiscard]] double length() const { return end - start; }
  [[nodiscard]] bool valid() const;

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

/// Index into the active label list.
using CategoryId = std::size_t;

/// Ordered list of category names. The last label is conventionally "Normal".
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  /// Default six labels: five violation categories followed by Normal.
  static const LabelSet& defaults();

  [[nodiscard]] std::size_t size() const { return names_.size(); }
  [[nodiscard]] const std::string& name(CategoryId id) const { return names_.at(id); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

  /// Returns size() when the name is not a member.
  [[nodiscard]] CategoryId find(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const { return find(name) != size(); }

  /// Id of the "Normal" label, or size() if absent.
  [[nodiscard]] CategoryId normal() const { return find("Normal"); }

  /// All ids except Normal, in label order.
  [[nodiscard]] std::vector<CategoryId> violation_ids() const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::string> names_;
};

/// Category -> intervals. A category present in the map always has a
/// non-empty list; absence of a category is absence of the key.
class SegmentSet {
 public:
  using Map = std::map<CategoryId, std::vector<TimeInterval>>;

  void add(CategoryId c, TimeInterval iv);

  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] std::size_t num_categories() const { return entries_.size(); }
  [[nodiscard]] bool contains(CategoryId c) const { return entries_.contains(c); }

  /// Empty span for absent categories.
  [[nodiscard]] const std::vector<TimeInterval>& at(CategoryId c) const;
  [[nodiscard]] std::vector<CategoryId> categories() const;
  [[nodiscard]] const Map& entries() const { return entries_; }

  /// Sort each category's intervals by (start, end).
  void normalize();

  [[nodiscard]] bool within(double duration) const;

  friend bool operator==(const SegmentSet&, const SegmentSet&) = default;

 private:
  Map entries_;
};

enum class Tier { precise, coarse };

std::string_view to_string(Tier t);
Tier tier_from_string(std::string_view s);

/// Row-major B x F feature matrix, one row per time bin.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t bins, std::size_t features)
      : bins_(bins), features_(features), data_(bins * features, 0.0) {}

  [[nodiscard]] std::size_t bins() const { return bins_; }
  [[nodiscard]] std::size_t features() const { return features_; }
  double& operator()(std::size_t b, std::size_t f) { return data_[b * features_ + f]; }
  double operator()(std::size_t b, std::size_t f) const { return data_[b * features_ + f]; }
  [[nodiscard]] const std::vector<double>& data() const { return data_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t bins_ = 0;
  std::size_t features_ = 0;
  std::vector<double> data_;
};

struct AnnotatedVideo {
  std::string video_id;
  double duration = 0.0;
  FeatureMatrix bins;
  SegmentSet ground_truth;  // Z
  SegmentSet annotation;    // Y
  Tier tier = Tier::precise;

  [[nodiscard]] bool valid() const;
  [[nodiscard]] double bin_width() const { return duration / static_cast<double>(bins.bins()); }

  friend bool operator==(const AnnotatedVideo&, const AnnotatedVideo&) = default;
};

/// Read-only view of a video that hides the ground truth. The training path
/// only ever receives this type.
class TrainingView {
 public:
  explicit TrainingView(const AnnotatedVideo& v) : video_(&v) {}

  [[nodiscard]] const std::string& video_id() const { return video_->video_id; }
  [[nodiscard]] double duration() const { return video_->duration; }
  [[nodiscard]] const FeatureMatrix& bins() const { return video_->bins; }
  [[nodiscard]] const SegmentSet& annotation() const { return video_->annotation; }
  [[nodiscard]] Tier tier() const { return video_->tier; }

 private:
  const AnnotatedVideo* video_;
};

class InvalidInterval : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// |a ∩ b| / |a ∪ b|. Identical zero-length intervals give 1, any other
/// zero-measure union gives 0.
double interval_iou(const TimeInterval& a, const TimeInterval& b);

/// Sorted, merged copy; touching or overlapping intervals are joined.
std::vector<TimeInterval> coalesce(std::vector<TimeInterval> ivs);

/// Total measure of a coalesced list.
double measure(const std::vector<TimeInterval>& coalesced);

/// Set-level IoU of the unions of two interval lists. Either list empty -> 0.
double union_iou(const std::vector<TimeInterval>& pred, const std::vector<TimeInterval>& ann);

}  // namespace vgrl
