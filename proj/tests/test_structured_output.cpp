#include <doctest.h>

#include <random>
#include <string>

#include "vgrl/structured_output.hpp"

using namespace vgrl;

namespace {

const LabelSet& L() { return LabelSet::defaults(); }

ReasoningOutput random_output(std::mt19937_64& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyz ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:!?'\"()[]{}<>/\\-_\n\t";
  std::uniform_int_distribution<std::size_t> len(0, 40), ch(0, alphabet.size() - 1);
  ReasoningOutput out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out.think += alphabet[ch(rng)];
  std::uniform_int_distribution<int> ncat(0, 4), nint(1, 3);
  std::uniform_int_distribution<std::size_t> cat(0, L().size() - 1);
  std::uniform_int_distribution<long> ms(0, 300000);
  const int k = ncat(rng);
  for (int i = 0; i < k; ++i) {
    const CategoryId c = cat(rng);
    const int m = nint(rng);
    for (int j = 0; j < m; ++j) {
      long a = ms(rng), b = ms(rng);
      if (a > b) std::swap(a, b);
      out.predictions.add(c, {static_cast<double>(a) / 1000.0, static_cast<double>(b) / 1000.0});
    }
  }
  out.predictions.normalize();
  return out;
}

// Mixes grammar fragments so that a fair share of inputs come close to valid.
std::string fuzz_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "<think>", "</think>", "<answer>", "</answer>", "[", "]", "{", "}", ",", ":", " ",
      "\"category\"", "\"temporal start\"", "\"temporal end\"", "\"VulgarContent\"", "\"Normal\"",
      "\"extra\"", "3.5", "8", "-1", "1e2", ".5", "12.", "abc", "from", "to", "\\", "\"", "null",
      "true", "\xff", "\x00"};
  std::uniform_int_distribution<std::size_t> n(0, 30), pick(0, pieces.size() - 1);
  std::string s;
  const std::size_t k = n(rng);
  for (std::size_t i = 0; i < k; ++i) s += pieces[pick(rng)];
  return s;
}

std::string mutate(std::string s, std::mt19937_64& rng) {
  if (s.empty()) return s;
  std::uniform_int_distribution<int> op(0, 3), byte(0, 255);
  std::uniform_int_distribution<std::size_t> pos(0, s.size() - 1);
  switch (op(rng)) {
    case 0: s.erase(pos(rng), 1); break;
    case 1: s.insert(s.begin() + static_cast<long>(pos(rng)), static_cast<char>(byte(rng))); break;
    case 2: s[pos(rng)] = static_cast<char>(byte(rng)); break;
    default: {
      const auto p = pos(rng);
      s = s.substr(0, p) + s.substr(p, s.size() - p);
      s += s.substr(0, pos(rng) % 7);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("render matches the wire format") {
  ReasoningOutput out{"t", {}};
  out.predictions.add(L().find("VulgarContent"), {4, 9});
  CHECK(render(out, L()) ==
        R"(<think>t</think><answer>[{"category": "VulgarContent", "temporal start": 4.0, "temporal end": 9.0}]</answer>)");
  CHECK(render(ReasoningOutput{}, L()) == "<think></think><answer>[]</answer>");
}

TEST_CASE("render orders by category id then start") {
  ReasoningOutput out;
  out.predictions.add(3, {10, 12});
  out.predictions.add(1, {5, 6});
  out.predictions.add(3, {1, 2});
  const auto text = render(out, L());
  const auto a = text.find(L().name(1));
  const auto b = text.find("\"temporal start\": 1.0");
  const auto c = text.find("\"temporal start\": 10.0");
  CHECK(a < b);
  CHECK(b < c);
}

TEST_CASE("format_seconds") {
  CHECK(format_seconds(4) == "4.0");
  CHECK(format_seconds(3.25) == "3.25");
  CHECK(format_seconds(0.1234) == "0.123");
  CHECK(format_seconds(0) == "0.0");
}

TEST_CASE("render refuses tags inside the think text") {
  CHECK_THROWS_AS(render(ReasoningOutput{"a</think>b", {}}, L()), std::invalid_argument);
}

TEST_CASE("parse examples and errors") {
  ReasoningOutput out{"t", {}};
  out.predictions.add(L().find("VulgarContent"), {4, 9});
  CHECK(parse(render(out, L()), L()) == out);

  auto kind_of = [](std::string_view text) {
    try {
      parse(text, L());
    } catch (const ParseError& e) {
      CHECK_FALSE(e.fragment().empty());
      return e.kind();
    }
    FAIL("expected ParseError");
    return ParseErrorKind::MissingThinkBlock;
  };
  CHECK(kind_of("<think>x</think>") == ParseErrorKind::MissingAnswerBlock);
  CHECK(kind_of("<answer>[]</answer>") == ParseErrorKind::MissingThinkBlock);
  CHECK(kind_of(R"(<think>x</think><answer>[{"category":"VulgarContent","temporal start":9.0,"temporal end":4.0}]</answer>)") ==
        ParseErrorKind::MalformedAnswerPayload);
  CHECK(kind_of(R"(<think>x</think><answer>[{"category":"Nope","temporal start":1,"temporal end":4}]</answer>)") ==
        ParseErrorKind::MalformedAnswerPayload);
  CHECK(kind_of(R"(<think>x</think><answer>[{"category":"Normal","temporal start":1}]</answer>)") ==
        ParseErrorKind::MalformedAnswerPayload);
  CHECK(kind_of("<think>x</think><answer>[{</answer>") == ParseErrorKind::MalformedAnswerPayload);
  CHECK(kind_of("<think>x</think><answer>" + std::string(100, '[') + "</answer>") ==
        ParseErrorKind::MalformedAnswerPayload);
}

TEST_CASE("parse regroups repeated categories") {
  const auto r = parse(
      R"(<think></think><answer>[{"category":"Normal","temporal start":5,"temporal end":6},)"
      R"({"category":"Normal","temporal start":1,"temporal end":2}]</answer>)",
      L());
  REQUIRE(r.predictions.at(L().normal()).size() == 2);
  CHECK(r.predictions.at(L().normal())[0] == TimeInterval{1, 2});
}

TEST_CASE("validate examples") {
  ReasoningOutput out{"t", {}};
  out.predictions.add(0, {1, 2});
  auto v = validate(render(out, L()), L());
  CHECK(v.thinking_ok);
  CHECK(v.grounding_soft_ok);
  CHECK(v.grounding_strict_ok);
  REQUIRE(v.parse);
  CHECK(*v.parse == out);

  v = validate("<think>x</think><answer>from 3.5 to 8 it is vulgar</answer>", L());
  CHECK(v.thinking_ok);
  CHECK(v.grounding_soft_ok);
  CHECK_FALSE(v.grounding_strict_ok);

  v = validate("<answer>[]</answer><think>x</think>", L());
  CHECK_FALSE(v.thinking_ok);
  CHECK_FALSE(v.grounding_soft_ok);
  CHECK_FALSE(v.grounding_strict_ok);

  v = validate("<answer>[1, 2]</answer><think>x</think>", L());
  CHECK_FALSE(v.thinking_ok);
  CHECK(v.grounding_soft_ok);
}

TEST_CASE("strict needs exactly the three keys") {
  const auto v = validate(
      R"(<think></think><answer>[{"category":"Normal","temporal start":1,"temporal end":2,"note":3}]</answer>)",
      L());
  CHECK(v.grounding_soft_ok);
  CHECK(v.parse.has_value());
  CHECK_FALSE(v.grounding_strict_ok);
}

TEST_CASE("thinking check rejects duplicated tags and accepts an empty think block") {
  CHECK_FALSE(validate("<think>a</think><think>b</think><answer>1 2</answer>", L()).thinking_ok);
  CHECK(validate("<think></think><answer>1 2</answer>", L()).thinking_ok);
}

TEST_CASE("round trip on random outputs") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto out = random_output(rng);
    const auto text = render(out, L());
    REQUIRE(parse(text, L()) == out);
  }
}

TEST_CASE("strict implies soft on fuzzed and rendered strings") {
  std::mt19937_64 rng(77);
  int strict = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto text = fuzz_text(rng);
    const auto v = validate(text, L());
    if (v.grounding_strict_ok) {
      ++strict;
      CHECK(v.grounding_soft_ok);
      CHECK(v.parse.has_value());
    }
  }
  for (int i = 0; i < 1000; ++i) {
    const auto text = mutate(render(random_output(rng), L()), rng);
    const auto v = validate(text, L());
    if (v.grounding_strict_ok) {
      ++strict;
      CHECK(v.grounding_soft_ok);
      CHECK(v.parse.has_value());
    }
  }
  CHECK(strict > 0);
}

TEST_CASE("parse and validate never fail on arbitrary bytes") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> len(0, 200);
  for (int i = 0; i < 20000; ++i) {
    std::string s(len(rng), '\0');
    for (auto& c : s) c = static_cast<char>(byte(rng));
    if (i % 2) s = "<think>" + s + "</think><answer>" + s + "</answer>";
    try {
      (void)parse(s, L());
    } catch (const ParseError&) {
    }
    CHECK_NOTHROW((void)validate(s, L()));
  }
}
