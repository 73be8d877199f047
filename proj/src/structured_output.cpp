#include "vgrl/structured_output.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <json.hpp>

namespace vgrl {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr const char* kKeyCategory = "category";
constexpr const char* kKeyStart = "temporal start";
constexpr const char* kKeyEnd = "temporal end";

// Deeper nesting than this is never a valid payload; rejecting it up front
// keeps the recursive JSON parser off pathological input.
constexpr int kMaxNesting = 16;

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 80;
  if (s.size() <= kMax) return std::string(s);
  return std::string(s.substr(0, kMax)) + "...";
}

struct Block {
  std::size_t open = std::string_view::npos;  // position of the opening tag
  std::string_view body;
  bool found = false;
};

Block find_block(std::string_view text, std::string_view open, std::string_view close) {
  Block b;
  const auto o = text.find(open);
  if (o == std::string_view::npos) return b;
  const auto body_begin = o + open.size();
  const auto c = text.find(close, body_begin);
  if (c == std::string_view::npos) return b;
  b.open = o;
  b.body = text.substr(body_begin, c - body_begin);
  b.found = true;
  return b;
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::size_t count_numbers(std::string_view s) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool starts_number =
        is_digit(s[i]) || (s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1]));
    if (!starts_number) {
      ++i;
      continue;
    }
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i < s.size() && s[i] == '.') {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      std::size_t j = i + 1;
      if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
      if (j < s.size() && is_digit(s[j])) {
        i = j;
        while (i < s.size() && is_digit(s[i])) ++i;
      }
    }
    ++n;
  }
  return n;
}

bool nesting_ok(std::string_view s) {
  int depth = 0;
  for (char c : s) {
    if (c == '[' || c == '{') {
      if (++depth > kMaxNesting) return false;
    } else if (c == ']' || c == '}') {
      --depth;
    }
  }
  return true;
}

[[noreturn]] void malformed(const std::string& what) {
  throw ParseError(ParseErrorKind::MalformedAnswerPayload, what);
}

struct Payload {
  SegmentSet predictions;
  bool exact_keys = true;
};

Payload parse_payload(std::string_view body, const LabelSet& labels) {
  if (!nesting_ok(body)) malformed(excerpt(body));
  const auto doc = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) malformed(excerpt(body));

  Payload out;
  for (const auto& obj : doc) {
    if (!obj.is_object()) malformed(excerpt(obj.dump()));
    const auto cat = obj.find(kKeyCategory);
    const auto start = obj.find(kKeyStart);
    const auto end = obj.find(kKeyEnd);
    if (cat == obj.end() || start == obj.end() || end == obj.end()) {
      malformed("missing key in " + excerpt(obj.dump()));
    }
    if (!cat->is_string() || !start->is_number() || !end->is_number()) {
      malformed("bad value type in " + excerpt(obj.dump()));
    }
    const auto& name = cat->get_ref<const std::string&>();
    const CategoryId id = labels.find(name);
    if (id == labels.size()) malformed("unknown category \"" + excerpt(name) + "\"");
    const TimeInterval iv{start->get<double>(), end->get<double>()};
    if (!iv.valid()) malformed("invalid interval in " + excerpt(obj.dump()));
    out.predictions.add(id, iv);
    if (obj.size() != 3) out.exact_keys = false;
  }
  out.predictions.normalize();
  return out;
}

}  // namespace

std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::MissingThinkBlock: return "MissingThinkBlock";
    case ParseErrorKind::MissingAnswerBlock: return "MissingAnswerBlock";
    case ParseErrorKind::MalformedAnswerPayload: return "MalformedAnswerPayload";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind, const std::string& fragment)
    : std::runtime_error(std::string(to_string(kind)) + ": " + fragment),
      kind_(kind),
      fragment_(fragment) {}

std::string format_seconds(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  std::string s(buf);
  while (s.size() > 2 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

std::string render(const ReasoningOutput& out, const LabelSet& labels) {
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (out.think.find(tag) != std::string::npos) {
      throw std::invalid_argument("think text contains a reserved tag");
    }
  }
  std::string s;
  s += kThinkOpen;
  s += out.think;
  s += kThinkClose;
  s += kAnswerOpen;
  s += '[';
  bool first = true;
  for (const auto& [c, ivs] : out.predictions.entries()) {
    auto sorted = ivs;
    std::sort(sorted.begin(), sorted.end(), [](const TimeInterval& a, const TimeInterval& b) {
      return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    const std::string name = nlohmann::json(labels.name(c)).dump();
    for (const auto& iv : sorted) {
      if (!first) s += ", ";
      first = false;
      s += "{\"category\": ";
      s += name;
      s += ", \"temporal start\": ";
      s += format_seconds(iv.start);
      s += ", \"temporal end\": ";
      s += format_seconds(iv.end);
      s += '}';
    }
  }
  s += ']';
  s += kAnswerClose;
  return s;
}

ReasoningOutput parse(std::string_view text, const LabelSet& labels) {
  const Block think = find_block(text, kThinkOpen, kThinkClose);
  if (!think.found) throw ParseError(ParseErrorKind::MissingThinkBlock, excerpt(text));
  const Block answer = find_block(text, kAnswerOpen, kAnswerClose);
  if (!answer.found) throw ParseError(ParseErrorKind::MissingAnswerBlock, excerpt(text));
  ReasoningOutput out;
  out.think = std::string(think.body);
  out.predictions = parse_payload(answer.body, labels).predictions;
  return out;
}

FormatVerdict validate(std::string_view text, const LabelSet& labels) {
  FormatVerdict v;

  const bool once = count_occurrences(text, kThinkOpen) == 1 &&
                    count_occurrences(text, kThinkClose) == 1 &&
                    count_occurrences(text, kAnswerOpen) == 1 &&
                    count_occurrences(text, kAnswerClose) == 1;
  if (once) {
    const auto a = text.find(kThinkOpen);
    const auto b = text.find(kThinkClose);
    const auto c = text.find(kAnswerOpen);
    const auto d = text.find(kAnswerClose);
    v.thinking_ok = a < b && b < c && c < d;
  }

  const Block answer = find_block(text, kAnswerOpen, kAnswerClose);
  v.grounding_soft_ok = answer.found && count_numbers(answer.body) >= 2;

  const Block think = find_block(text, kThinkOpen, kThinkClose);
  bool exact_keys = false;
  if (think.found && answer.found) {
    try {
      auto payload = parse_payload(answer.body, labels);
      exact_keys = payload.exact_keys;
      v.parse = ReasoningOutput{std::string(think.body), std::move(payload.predictions)};
    } catch (const ParseError&) {
    }
  }
  v.grounding_strict_ok = v.grounding_soft_ok && v.parse.has_value() && exact_keys;
  return v;
}

}  // namespace vgrl
