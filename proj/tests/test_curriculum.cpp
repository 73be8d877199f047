#include <doctest.h>

#include <limits>
#include <set>

#include "support.hpp"
#include "vgrl/curriculum.hpp"

using namespace vgrl;
using vgrl::testing::small_world;

namespace {

const LabelSet& L() { return LabelSet::defaults(); }

struct Data {
  std::vector<AnnotatedVideo> videos;
  std::vector<TrainingView> views;
  PolicyParameters init;

  explicit Data(std::size_t n = 30, double coarse_fraction = 0.7) {
    auto w = small_world(21, n);
    w.coarse_fraction = coarse_fraction;
    videos = generate_dataset(w);
    for (const auto& v : videos) views.emplace_back(v);
    init = PolicyParameters::random(PolicyShape::for_features(L().size(), videos[0].bins.features()), 1, 0.01);
  }
};

std::vector<StageConfig> short_schedule(std::size_t a, std::size_t b, std::size_t c) {
  auto s = default_schedule();
  s[0].steps = a;
  s[1].steps = b;
  s[2].steps = c;
  return s;
}

}  // namespace

TEST_CASE("default schedule shape") {
  const auto s = default_schedule();
  REQUIRE(s.size() == 3);
  CHECK(s[0].selector == DataSelector::precise_only);
  CHECK(s[1].selector == DataSelector::coarse_only);
  CHECK(s[2].selector == DataSelector::full);
  CHECK(s[1].steps == 2 * s[0].steps);
  CHECK(s[1].reward.weights.w_category == 0.0);
  CHECK_NOTHROW(check_schedule(s));
  const auto one = single_stage_schedule(40);
  REQUIRE(one.size() == 1);
  CHECK(one[0].stage_id == 3);
  CHECK(one[0].steps == 40);
}

TEST_CASE("check_schedule enforces stage pairing outside ablations") {
  auto s = default_schedule();
  s[0].selector = DataSelector::full;
  CHECK_THROWS_AS(check_schedule(s), ScheduleError);
  CHECK_NOTHROW(check_schedule(s, true));
  s = default_schedule();
  s[1].reward.weights.w_category = 1.0;
  CHECK_THROWS_AS(check_schedule(s), ScheduleError);
  CHECK_THROWS_AS(check_schedule({}), ScheduleError);
}

TEST_CASE("partition by tier") {
  Data d;
  const auto p = partition(d.views);
  CHECK(p.precise.size() + p.coarse.size() == d.views.size());
  CHECK(std::is_sorted(p.precise.begin(), p.precise.end()));
  CHECK(std::is_sorted(p.coarse.begin(), p.coarse.end()));
  for (auto i : p.precise) CHECK(d.views[i].tier() == Tier::precise);
  for (auto i : p.coarse) CHECK(d.views[i].tier() == Tier::coarse);
  const auto again = partition(d.views);
  CHECK(again.precise == p.precise);
  CHECK(again.coarse == p.coarse);
}

TEST_CASE("an all-precise dataset cannot feed stage 2") {
  Data d(20, 0.0);
  try {
    run_schedule(d.views, short_schedule(2, 2, 2), d.init, 1);
    FAIL("expected ScheduleError");
  } catch (const ScheduleError& e) {
    CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
  }
}

TEST_CASE("zero-step stages leave parameters unchanged and still report") {
  Data d;
  ScheduleOptions opts;
  opts.eval_set = &d.videos;
  const auto r = run_schedule(d.views, short_schedule(0, 0, 0), d.init, 1, opts);
  REQUIRE(r.stages.size() == 3);
  CHECK(r.final_params == d.init);
  for (const auto& s : r.stages) {
    CHECK(s.steps.empty());
    CHECK(s.eval_gt.has_value());
    CHECK(s.eval_ann.has_value());
  }
}

TEST_CASE("tier isolation, reference snapshots and step numbering") {
  Data d;
  const auto r = run_schedule(d.views, short_schedule(12, 15, 9), d.init, 5);
  REQUIRE(r.stages.size() == 3);
  std::size_t expected_step = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& s = r.stages[k];
    for (const auto& rec : s.steps) {
      CHECK(rec.step == expected_step++);
      CHECK(rec.stage_index == k);
      CHECK(rec.ref_hash == s.ref_hash);
      CHECK(rec.rewards.size() == s.config.grpo.group_size);
      if (k == 0) CHECK(rec.tier == Tier::precise);
      if (k == 1) CHECK(rec.tier == Tier::coarse);
    }
  }
  CHECK(r.stages[0].ref_hash == d.init.hash());
  CHECK(r.stages[1].ref_hash == r.stages[0].params.hash());
  CHECK(r.stages[2].ref_hash == r.stages[1].params.hash());
  CHECK_FALSE(r.final_params == d.init);
}

TEST_CASE("round robin visits every pool video before repeating") {
  Data d;
  const auto p = partition(d.views);
  const auto r = run_schedule(d.views, short_schedule(p.precise.size(), 1, 1), d.init, 2);
  std::set<std::string> seen;
  for (const auto& rec : r.stages[0].steps) seen.insert(rec.video_id);
  CHECK(seen.size() == p.precise.size());
}

TEST_CASE("the schedule is deterministic") {
  Data d;
  const auto a = run_schedule(d.views, short_schedule(5, 5, 5), d.init, 9, {2});
  const auto b = run_schedule(d.views, short_schedule(5, 5, 5), d.init, 9, {1});
  CHECK(a.final_params == b.final_params);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < a.stages[k].steps.size(); ++i) {
      CHECK(a.stages[k].steps[i].video_id == b.stages[k].steps[i].video_id);
      CHECK(a.stages[k].steps[i].stats.mean_reward == b.stages[k].steps[i].stats.mean_reward);
    }
  }
  const auto c = run_schedule(d.views, short_schedule(5, 5, 5), d.init, 10);
  CHECK_FALSE(c.final_params == a.final_params);
}

TEST_CASE("single stage run is the no-curriculum arm") {
  Data d;
  const auto r = run_schedule(d.views, single_stage_schedule(7), d.init, 3);
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].steps.size() == 7);
  bool coarse = false, precise = false;
  const auto rr = run_schedule(d.views, single_stage_schedule(d.views.size()), d.init, 3);
  for (const auto& rec : rr.stages[0].steps) (rec.tier == Tier::coarse ? coarse : precise) = true;
  CHECK(coarse);
  CHECK(precise);
}

TEST_CASE("divergence keeps the partial report") {
  Data d;
  auto bad = d.init;
  bad.weights()[0] = std::numeric_limits<double>::quiet_NaN();
  std::size_t logged = 0;
  ScheduleOptions opts;
  opts.on_step = [&](const StepRecord&) { ++logged; };
  const auto r = run_schedule(d.views, short_schedule(3, 3, 3), bad, 1, opts);
  CHECK(r.diverged);
  CHECK_FALSE(r.error.empty());
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].steps.size() == 1);
  CHECK(logged == 0);
}
