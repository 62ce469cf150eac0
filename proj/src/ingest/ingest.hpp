#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/schedule.hpp"

namespace schedsyn::ingest {

// One travel-diary activity row. Rows for a person-day alternate with trips;
// `trip_min` is the duration of the trip immediately following the activity
// (0 when none).
struct DiaryRow {
  std::string pid;
  std::string day;
  std::string activity;
  int start_min = 0;
  int end_min = 0;
  int trip_min = 0;
};

// Total map from raw diary labels to the canonical activity set. Lookup of an
// unmapped label raises DataError.
class LabelMap {
 public:
  void add(const std::string& raw, core::Activity act) { map_[raw] = act; }
  core::Activity lookup(const std::string& raw) const;
  size_t size() const { return map_.size(); }

  // CSV with header `raw,canonical`.
  static LabelMap from_csv(const std::string& path);

 private:
  std::map<std::string, core::Activity> map_;
};

// Folds each trip into the preceding activity so activity start times are
// preserved and the result tiles [0, 1440]. Raises DataError on gaps/overlaps.
core::Schedule absorb_trips(const std::vector<DiaryRow>& rows, const LabelMap& labels);

struct CleanReport {
  uint64_t dropped_non_home_based = 0;
  uint64_t merged_schedules = 0;
};

// Drops non-home-based schedules and merges consecutive home/work/education
// activities.
core::ScheduleSample clean(const core::ScheduleSample& sample, CleanReport* report = nullptr);

struct IngestReport {
  uint64_t person_days = 0;
  uint64_t dropped_bad_tiling = 0;
  CleanReport clean;
};

// Full pipeline: CSV rows (pid,day,act,start_min,end_min,trip_min with
// header) -> per-person-day absorb_trips -> clean. Output is order-stable by
// (pid, day). Person-days that fail tiling are dropped and counted.
core::ScheduleSample ingest_csv(const std::string& diaries_path, const LabelMap& labels,
                                IngestReport* report = nullptr);

// Seed-deterministic disjoint partition with sizes (floor(fraction*n), rest).
std::pair<core::ScheduleSample, core::ScheduleSample> split_train_val(
    const core::ScheduleSample& sample, double fraction, uint64_t seed);

}  // namespace schedsyn::ingest
