#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "core/rng.hpp"
#include "core/schedule.hpp"

namespace schedsyn::testing {

inline core::Schedule make_schedule(
    std::initializer_list<std::pair<core::Activity, int>> entries) {
  core::Schedule s;
  for (const auto& [a, d] : entries) s.entries.push_back({a, d});
  return s;
}

// Random valid schedule: k entries with positive durations summing to 1440,
// built from distinct cut points. With `step_aligned` all boundaries fall on
// multiples of `step`; with `distinct_neighbours` no two adjacent entries
// share a type.
inline core::Schedule random_schedule(rng::Sequence& rng, int max_entries = 15,
                                      bool step_aligned = false, int step = 10,
                                      bool distinct_neighbours = false) {
  const int positions = step_aligned ? core::kDayMinutes / step : core::kDayMinutes;
  const int k = 1 + static_cast<int>(rng.below(
                        static_cast<uint64_t>(std::min(max_entries, positions))));
  std::set<int> cuts;
  while (static_cast<int>(cuts.size()) < k - 1) {
    cuts.insert(1 + static_cast<int>(rng.below(static_cast<uint64_t>(positions - 1))));
  }
  std::vector<int> bounds{0};
  for (int c : cuts) bounds.push_back(step_aligned ? c * step : c);
  bounds.push_back(core::kDayMinutes);

  core::Schedule s;
  int prev = -1;
  for (int i = 0; i < k; ++i) {
    int act = static_cast<int>(rng.below(core::kActivityCount));
    if (distinct_neighbours && act == prev) act = (act + 1) % core::kActivityCount;
    prev = act;
    s.entries.push_back({static_cast<core::Activity>(act), bounds[i + 1] - bounds[i]});
  }
  return s;
}

}  // namespace schedsyn::testing
