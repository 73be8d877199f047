#include <doctest.h>

#include <random>

#include "vgrl/core_types.hpp"

using namespace vgrl;

TEST_CASE("interval_iou examples") {
  CHECK(interval_iou({0, 10}, {5, 15}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(interval_iou({3, 7}, {3, 7}) == 1.0);
  CHECK(interval_iou({0, 1}, {2, 3}) == 0.0);
}

TEST_CASE("interval_iou degenerate conventions") {
  CHECK(interval_iou({2, 2}, {2, 2}) == 1.0);
  CHECK(interval_iou({2, 2}, {3, 3}) == 0.0);
  CHECK(interval_iou({2, 2}, {0, 4}) == 0.0);
}

TEST_CASE("interval_iou is symmetric and reflexive") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 2000; ++i) {
    double a0 = u(rng), a1 = u(rng), b0 = u(rng), b1 = u(rng);
    if (a0 > a1) std::swap(a0, a1);
    if (b0 > b1) std::swap(b0, b1);
    const TimeInterval a{a0, a1}, b{b0, b1};
    CHECK(interval_iou(a, b) == interval_iou(b, a));
    const double v = interval_iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (a.length() > 0) CHECK(interval_iou(a, a) == 1.0);
  }
}

TEST_CASE("union_iou examples") {
  CHECK(union_iou({{0, 5}, {10, 15}}, {{0, 5}, {10, 15}}) == 1.0);
  CHECK(union_iou({{0, 4}}, {{2, 6}}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(union_iou({{0, 2}, {2, 4}}, {{0, 4}}) == 1.0);
  CHECK(union_iou({}, {{0, 4}}) == 0.0);
  CHECK(union_iou({{0, 4}}, {}) == 0.0);
}

TEST_CASE("union_iou is invariant under splitting into touching pieces") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const double mid = a + (b - a) * 0.37;
    const double whole = union_iou({{a, b}}, {{c, d}});
    const double split = union_iou({{a, mid}, {mid, b}}, {{c, d}});
    CHECK(split == doctest::Approx(whole).epsilon(1e-12));
    CHECK(whole <= 1.0);
  }
}

TEST_CASE("union_iou equals one only for equal point sets") {
  CHECK(union_iou({{0, 3}, {3, 6}}, {{0, 6}}) == 1.0);
  CHECK(union_iou({{0, 3}, {4, 6}}, {{0, 6}}) < 1.0);
  CHECK(union_iou({{1, 1}}, {{1, 1}}) == 1.0);
}

TEST_CASE("coalesce and measure") {
  const auto c = coalesce({{5, 7}, {0, 2}, {1, 3}, {3, 4}});
  REQUIRE(c.size() == 2);
  CHECK(c[0] == TimeInterval{0, 4});
  CHECK(c[1] == TimeInterval{5, 7});
  CHECK(measure(c) == 6.0);
}

TEST_CASE("TimeInterval validity") {
  CHECK(TimeInterval{0, 0}.valid());
  CHECK(TimeInterval{1, 2}.valid());
  CHECK_FALSE(TimeInterval{2, 1}.valid());
  CHECK_FALSE(TimeInterval{-1, 2}.valid());
  CHECK_FALSE((TimeInterval{0, std::numeric_limits<double>::infinity()}.valid()));
}

TEST_CASE("SegmentSet keeps non-empty lists and rejects bad intervals") {
  SegmentSet s;
  CHECK(s.empty());
  s.add(2, {4, 5});
  s.add(2, {1, 2});
  s.add(0, {0, 1});
  CHECK(s.num_categories() == 2);
  CHECK(s.at(3).empty());
  CHECK_FALSE(s.contains(3));
  s.normalize();
  CHECK(s.at(2).front() == TimeInterval{1, 2});
  CHECK(s.categories() == std::vector<CategoryId>{0, 2});
  CHECK(s.within(5.0));
  CHECK_FALSE(s.within(4.5));
  CHECK_THROWS_AS(s.add(1, {3, 2}), InvalidInterval);
}

TEST_CASE("LabelSet defaults") {
  const auto& l = LabelSet::defaults();
  REQUIRE(l.size() == 6);
  CHECK(l.name(l.normal()) == "Normal");
  CHECK(l.find("VulgarContent") < l.size());
  CHECK(l.find("Nope") == l.size());
  CHECK(l.violation_ids().size() == 5);
}

TEST_CASE("tier names round trip") {
  CHECK(tier_from_string(to_string(Tier::precise)) == Tier::precise);
  CHECK(tier_from_string(to_string(Tier::coarse)) == Tier::coarse);
  CHECK_THROWS(tier_from_string("medium"));
}
