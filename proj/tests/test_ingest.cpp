#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>

#include "core/error.hpp"
#include "helpers.hpp"
#include "ingest/ingest.hpp"

using namespace schedsyn;
using core::Activity;
using schedsyn::testing::make_schedule;

namespace {

ingest::LabelMap identity_labels() {
  ingest::LabelMap map;
  for (int i = 0; i < core::kActivityCount; ++i) {
    const auto a = static_cast<Activity>(i);
    map.add(std::string(core::activity_label(a)), a);
  }
  return map;
}

std::vector<ingest::DiaryRow> rows(std::initializer_list<std::tuple<const char*, int, int, int>> spec) {
  std::vector<ingest::DiaryRow> out;
  for (const auto& [act, start, end, trip] : spec) {
    out.push_back({"p1", "d1", act, start, end, trip});
  }
  return out;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("/tmp/schedsyn_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("absorb_trips extends activities over following trips") {
  const auto labels = identity_labels();
  const auto s = ingest::absorb_trips(
      rows({{"home", 0, 470, 10}, {"work", 480, 1010, 10}, {"home", 1020, 1440, 0}}), labels);
  CHECK(s == make_schedule({{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}}));
}

TEST_CASE("absorb_trips identity without trips") {
  const auto labels = identity_labels();
  const auto s = ingest::absorb_trips(rows({{"home", 0, 1440, 0}}), labels);
  CHECK(s == make_schedule({{Activity::Home, 1440}}));
}

TEST_CASE("absorb_trips rejects overlaps and gaps") {
  const auto labels = identity_labels();
  CHECK_THROWS_AS(
      ingest::absorb_trips(rows({{"home", 0, 500, 0}, {"work", 480, 1440, 0}}), labels),
      DataError);
  CHECK_THROWS_AS(
      ingest::absorb_trips(rows({{"home", 0, 400, 0}, {"work", 500, 1440, 0}}), labels),
      DataError);
  CHECK_THROWS_AS(ingest::absorb_trips(rows({{"home", 0, 1400, 0}}), labels), DataError);
}

TEST_CASE("absorb_trips preserves activity start times") {
  const auto labels = identity_labels();
  const auto input =
      rows({{"home", 0, 450, 30}, {"shop", 480, 520, 20}, {"home", 540, 1430, 10}});
  const auto s = ingest::absorb_trips(input, labels);
  const auto starts = s.start_times();
  REQUIRE(starts.size() == input.size());
  for (size_t i = 0; i < input.size(); ++i) CHECK(starts[i] == input[i].start_min);
  CHECK(s.total_minutes() == core::kDayMinutes);
}

TEST_CASE("clean drops non-home-based and merges forbidden runs") {
  core::ScheduleSample sample;
  sample.schedules = {
      make_schedule({{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}}),
      make_schedule({{Activity::Work, 480}, {Activity::Home, 540}, {Activity::Work, 420}}),
      make_schedule({{Activity::Home, 100},
                     {Activity::Home, 200},
                     {Activity::Shop, 140},
                     {Activity::Home, 1000}}),
  };
  ingest::CleanReport report;
  const auto cleaned = ingest::clean(sample, &report);
  REQUIRE(cleaned.schedules.size() == 2);
  CHECK(report.dropped_non_home_based == 1);
  CHECK(report.merged_schedules == 1);
  for (const auto& s : cleaned.schedules) {
    CHECK(core::is_home_based(s));
    CHECK_FALSE(core::has_forbidden_consecutive(s));
  }
  CHECK(cleaned.schedules[1] == make_schedule({{Activity::Home, 300},
                                               {Activity::Shop, 140},
                                               {Activity::Home, 1000}}));
}

TEST_CASE("clean of empty sample is empty") {
  ingest::CleanReport report;
  const auto cleaned = ingest::clean(core::ScheduleSample{}, &report);
  CHECK(cleaned.schedules.empty());
  CHECK(report.dropped_non_home_based == 0);
}

TEST_CASE("split_train_val produces floor(0.9 n) / rest partitions") {
  core::ScheduleSample sample;
  rng::Sequence rng(5);
  for (int i = 0; i < 100; ++i) {
    sample.schedules.push_back(schedsyn::testing::random_schedule(rng));
  }
  const auto [train, val] = ingest::split_train_val(sample, 0.9, 17);
  CHECK(train.schedules.size() == 90);
  CHECK(val.schedules.size() == 10);

  // Same seed, same split; partition covers the input exactly.
  const auto [train2, val2] = ingest::split_train_val(sample, 0.9, 17);
  CHECK(train.schedules == train2.schedules);
  CHECK(val.schedules == val2.schedules);

  std::multiset<int> input_totals, part_totals;
  auto count = [](std::multiset<int>& dst, const core::ScheduleSample& s) {
    for (const auto& sched : s.schedules) {
      dst.insert(static_cast<int>(sched.entries.size()) * 10000 +
                 sched.entries.front().duration_min);
    }
  };
  count(input_totals, sample);
  count(part_totals, train);
  count(part_totals, val);
  CHECK(input_totals == part_totals);
}

TEST_CASE("split_train_val sizes at survey scale") {
  core::ScheduleSample sample;
  sample.schedules.resize(59265, make_schedule({{Activity::Home, 1440}}));
  const auto [train, val] = ingest::split_train_val(sample, 0.9, 1);
  CHECK(train.schedules.size() == 53338);
  CHECK(val.schedules.size() == 5927);
}

TEST_CASE("split_train_val rejects tiny samples") {
  core::ScheduleSample sample;
  sample.schedules.resize(9, make_schedule({{Activity::Home, 1440}}));
  CHECK_THROWS_AS(ingest::split_train_val(sample, 0.9, 1), DataError);
}

TEST_CASE("ingest_csv end to end") {
  const TempFile labels("labels.csv",
                        "raw,canonical\n"
                        "Home,home\nWork,work\nShopping,shop\n");
  const TempFile diaries("diaries.csv",
                         "pid,day,act,start_min,end_min,trip_min\n"
                         "p2,d1,Home,0,470,10\n"
                         "p2,d1,Work,480,1010,10\n"
                         "p2,d1,Home,1020,1440,0\n"
                         "p1,d1,Home,0,1440,0\n"
                         "p3,d1,Work,0,700,20\n"   // not home-based
                         "p3,d1,Home,720,1440,0\n"
                         "p4,d1,Home,0,500,0\n"    // gap: dropped
                         "p4,d1,Home,600,1440,0\n");
  const auto map = ingest::LabelMap::from_csv(labels.path);
  CHECK(map.size() == 3);

  ingest::IngestReport report;
  const auto sample = ingest::ingest_csv(diaries.path, map, &report);
  CHECK(report.person_days == 4);
  CHECK(report.dropped_bad_tiling == 1);
  CHECK(report.clean.dropped_non_home_based == 1);
  REQUIRE(sample.schedules.size() == 2);
  // Order-stable by (pid, day).
  CHECK(sample.ids[0] == "p1");
  CHECK(sample.schedules[1] == make_schedule({{Activity::Home, 480},
                                              {Activity::Work, 540},
                                              {Activity::Home, 420}}));
}
