#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/error.hpp"
#include "core/sample_io.hpp"
#include "core/schedule.hpp"
#include "helpers.hpp"

using namespace schedsyn;
using core::Activity;
using schedsyn::testing::make_schedule;

TEST_CASE("validate accepts full-day schedules") {
  CHECK(core::validate(make_schedule({{Activity::Home, 1440}})).ok);
  CHECK(core::validate(make_schedule(
                           {{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}}))
            .ok);
}

TEST_CASE("validate reports the first violated rule") {
  const auto v = core::validate(make_schedule({{Activity::Home, 480}, {Activity::Work, 480}}));
  CHECK_FALSE(v.ok);
  CHECK(v.violation == "duration-sum 960 != 1440");
  CHECK_FALSE(core::validate(core::Schedule{}).ok);
}

TEST_CASE("is_home_based") {
  CHECK(core::is_home_based(make_schedule(
      {{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}})));
  CHECK_FALSE(core::is_home_based(make_schedule(
      {{Activity::Work, 480}, {Activity::Home, 540}, {Activity::Work, 420}})));
  CHECK(core::is_home_based(make_schedule({{Activity::Home, 1440}})));
}

TEST_CASE("has_forbidden_consecutive only triggers on home/work/education") {
  CHECK(core::has_forbidden_consecutive(make_schedule({{Activity::Home, 100},
                                                       {Activity::Home, 200},
                                                       {Activity::Shop, 140},
                                                       {Activity::Home, 1000}})));
  CHECK_FALSE(core::has_forbidden_consecutive(make_schedule({{Activity::Home, 700},
                                                             {Activity::Shop, 40},
                                                             {Activity::Shop, 300},
                                                             {Activity::Home, 400}})));
  CHECK_FALSE(core::has_forbidden_consecutive(make_schedule(
      {{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}})));
}

TEST_CASE("merge_consecutive sums runs of listed types") {
  const auto merged = core::merge_consecutive(make_schedule(
      {{Activity::Home, 100}, {Activity::Home, 200}, {Activity::Shop, 1140}}));
  CHECK(merged == make_schedule({{Activity::Home, 300}, {Activity::Shop, 1140}}));

  const auto shops = make_schedule(
      {{Activity::Home, 700}, {Activity::Shop, 40}, {Activity::Shop, 700}});
  CHECK(core::merge_consecutive(shops) == shops);

  const auto allday = make_schedule({{Activity::Home, 1440}});
  CHECK(core::merge_consecutive(allday) == allday);
}

TEST_CASE("merge_consecutive is idempotent and kills forbidden runs") {
  rng::Sequence rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = schedsyn::testing::random_schedule(rng);
    const auto once = core::merge_consecutive(s);
    CHECK(core::merge_consecutive(once) == once);
    CHECK_FALSE(core::has_forbidden_consecutive(once));
    CHECK(core::validate(once).ok);
  }
}

TEST_CASE("round_to_minutes splits the day exactly") {
  const auto halves =
      core::round_to_minutes({{Activity::Home, 0.5}, {Activity::Work, 0.5}});
  CHECK(halves == make_schedule({{Activity::Home, 720}, {Activity::Work, 720}}));

  const auto thirds = core::round_to_minutes(
      {{Activity::Home, 1.0 / 3}, {Activity::Work, 1.0 / 3}, {Activity::Home, 1.0 / 3}});
  REQUIRE(thirds.entries.size() == 3);
  for (const auto& e : thirds.entries) CHECK(e.duration_min == 480);
}

TEST_CASE("round_to_minutes drops sub-minute entries unless strict") {
  // 0.9999 days = 1439.856 min and 0.0001 days = 0.144 min; the leftover
  // minute goes to the larger remainder, so shop rounds to zero.
  const auto s =
      core::round_to_minutes({{Activity::Home, 0.9999}, {Activity::Shop, 0.0001}});
  CHECK(s == make_schedule({{Activity::Home, 1440}}));
  CHECK_THROWS_AS(
      core::round_to_minutes({{Activity::Home, 0.9999}, {Activity::Shop, 0.0001}}, true),
      DataError);
}

TEST_CASE("round_to_minutes rejects bad totals") {
  CHECK_THROWS_AS(core::round_to_minutes({{Activity::Home, 0.4}}), DataError);
  CHECK_THROWS_AS(core::round_to_minutes({}), DataError);
}

TEST_CASE("round_to_minutes always sums to 1440 on random fractions") {
  rng::Sequence rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(12));
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& x : w) total += (x = rng.uniform01() + 1e-9);
    std::vector<std::pair<Activity, double>> fracs;
    for (int i = 0; i < k; ++i) {
      fracs.push_back({static_cast<Activity>(rng.below(8)), w[i] / total});
    }
    const auto s = core::round_to_minutes(fracs);
    CHECK(s.total_minutes() == core::kDayMinutes);
  }
}

TEST_CASE("sample files round-trip") {
  core::ScheduleSample sample;
  sample.kind = core::SampleKind::Synthetic;
  sample.seed = 42;
  sample.source = "unit";
  sample.degenerate_count = 2;
  rng::Sequence rng(3);
  for (int i = 0; i < 25; ++i) {
    sample.schedules.push_back(schedsyn::testing::random_schedule(rng));
  }

  std::stringstream buffer;
  core::save_sample(sample, buffer);
  const auto loaded = core::load_sample(buffer, "buffer");
  CHECK(loaded.schedules == sample.schedules);
  CHECK(loaded.kind == core::SampleKind::Synthetic);
  CHECK(loaded.seed == sample.seed);
  CHECK(loaded.source == "unit");
  CHECK(loaded.degenerate_count == 2);
}

TEST_CASE("sample parser rejects garbage") {
  std::stringstream bad("p1;home:100,work:100\n");
  CHECK_THROWS_AS(core::load_sample(bad, "bad"), DataError);
  std::stringstream worse("p1;picnic:1440\n");
  CHECK_THROWS_AS(core::load_sample(worse, "worse"), DataError);
}
