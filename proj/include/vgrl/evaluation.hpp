#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vgrl/core_types.hpp"
#include "vgrl/policy.hpp"

namespace vgrl {

enum class Reference { ground_truth, annotation };
enum class DecodeMode { greedy, sampled };

std::string_view to_string(Reference r);
std::string_view to_string(DecodeMode d);
Reference reference_from_string(std::string_view s);  // "gt" | "ann" | full names
DecodeMode decode_mode_from_string(std::string_view s);

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

/// Multi-label counting per category over aligned prediction/reference lists.
/// Zero denominators give 1.0.
std::vector<PrecisionRecall> category_pr(const std::vector<SegmentSet>& preds,
                                         const std::vector<SegmentSet>& refs,
                                         std::size_t num_categories);

struct GroundingScores {
  std::vector<std::optional<double>> per_category;  // empty when absent from every reference
  double average = 0.0;                             // over categories with a value
};

/// Mean union IoU over (video, category) pairs where the category is in the
/// reference.
GroundingScores grounding_miou(const std::vector<SegmentSet>& preds,
                               const std::vector<SegmentSet>& refs, std::size_t num_categories);

struct CategoryReport {
  std::string name;
  bool in_reference = false;
  PrecisionRecall pr;
  std::optional<double> miou;
};

struct EvalReport {
  std::vector<CategoryReport> categories;
  double avg_precision = 0.0;
  double avg_recall = 0.0;
  double avg_miou = 0.0;
  Reference reference = Reference::ground_truth;
  DecodeMode decode = DecodeMode::greedy;
  std::size_t num_videos = 0;
  std::uint64_t seed = 0;
};

EvalReport build_report(const std::vector<SegmentSet>& preds, const std::vector<SegmentSet>& refs,
                        const LabelSet& labels);

/// Decodes every video, parses the rendered text back and scores it against
/// the chosen reference. A parse failure of policy output throws std::logic_error.
EvalReport evaluate(const PolicyParameters& params, const std::vector<AnnotatedVideo>& dataset,
                    const LabelSet& labels, Reference reference,
                    DecodeMode decode = DecodeMode::greedy, std::uint64_t seed = 0,
                    std::size_t threads = 1);

nlohmann::ordered_json to_json(const EvalReport& r);

/// Category columns plus Average; rows "Cate.(P/R)" and "Gro.".
std::string to_csv(const EvalReport& r);

}  // namespace vgrl
