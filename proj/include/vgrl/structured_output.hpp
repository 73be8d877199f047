#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vgrl/core_types.hpp"

namespace vgrl {

/// A parsed `<think>...</think><answer>[...]</answer>` completion.
struct ReasoningOutput {
  std::string think;
  SegmentSet predictions;

  friend bool operator==(const ReasoningOutput&, const ReasoningOutput&) = default;
};

struct FormatVerdict {
  bool thinking_ok = false;
  bool grounding_soft_ok = false;
  bool grounding_strict_ok = false;
  std::optional<ReasoningOutput> parse;
};

enum class ParseErrorKind { MissingThinkBlock, MissingAnswerBlock, MalformedAnswerPayload };

std::string_view to_string(ParseErrorKind k);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& fragment);

  [[nodiscard]] ParseErrorKind kind() const { return kind_; }
  [[nodiscard]] const std::string& fragment() const { return fragment_; }

 private:
  ParseErrorKind kind_;
  std::string fragment_;
};

/// Canonical text for `out`. Objects are ordered by category id then start
/// time; times are printed with at most three fractional digits.
std::string render(const ReasoningOutput& out, const LabelSet& labels);

/// Throws ParseError. Never crashes on arbitrary input.
ReasoningOutput parse(std::string_view text, const LabelSet& labels);

/// Format checks used by the thinking and grounding format rewards.
///   thinking: each tag exactly once, in order think, /think, answer, /answer.
///   soft:     the answer block holds at least two numbers.
///   strict:   soft, parse succeeds and every object has exactly the keys
///             "category", "temporal start", "temporal end".
FormatVerdict validate(std::string_view text, const LabelSet& labels);

/// Decimal text for a time in seconds, e.g. 4 -> "4.0", 3.25 -> "3.25".
std::string format_seconds(double t);

}  // namespace vgrl
