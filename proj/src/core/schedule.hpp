#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace schedsyn::core {

// Minutes in the modelled day. Timing math is integer minutes internally;
// days (minutes / kDayMinutes) appear only at encoding and reporting edges.
inline constexpr int kDayMinutes = 1440;

enum class Activity : uint8_t {
  Home = 0,
  Work = 1,
  Education = 2,
  Medical = 3,
  Escort = 4,
  Other = 5,
  Visit = 6,
  Shop = 7,
};

inline constexpr int kActivityCount = 8;

std::string_view activity_label(Activity a);
std::optional<Activity> activity_from_label(std::string_view label);

struct Entry {
  Activity activity{Activity::Home};
  int duration_min = 0;
  bool operator==(const Entry&) const = default;
};

// One person-day: an ordered activity sequence whose durations tile the day.
struct Schedule {
  std::vector<Entry> entries;

  bool operator==(const Schedule&) const = default;

  int total_minutes() const;
  // Prefix sums: minutes from midnight at which each entry begins.
  std::vector<int> start_times() const;
};

struct Verdict {
  bool ok = true;
  std::string violation;  // first violated rule when !ok

  explicit operator bool() const { return ok; }
};

Verdict validate(const Schedule& s);

// First and last activity are home.
bool is_home_based(const Schedule& s);

// Any adjacent equal-type pair whose type is home, work or education.
bool has_forbidden_consecutive(const Schedule& s);

using ActivitySet = std::array<bool, kActivityCount>;

// home, work, education
inline constexpr ActivitySet kStructuralMergeSet = {true, true, true, false,
                                                    false, false, false, false};

ActivitySet make_activity_set(std::initializer_list<Activity> acts);

// Collapses adjacent equal-type runs whose type is in `types` into a single
// entry with the summed duration.
Schedule merge_consecutive(const Schedule& s, const ActivitySet& types = kStructuralMergeSet);

// Largest-remainder apportionment of fractional-day durations onto integer
// minutes summing to exactly kDayMinutes (ties broken by earliest entry).
// Entries that round to zero minutes are dropped; with `strict` they raise
// DataError instead. Raises DataError when nothing survives.
Schedule round_to_minutes(const std::vector<std::pair<Activity, double>>& fractional_days,
                          bool strict = false);

enum class SampleKind { Real, Synthetic };

struct ScheduleSample {
  std::vector<Schedule> schedules;
  std::vector<std::string> ids;  // optional; parallel to schedules when set
  SampleKind kind = SampleKind::Real;
  std::optional<uint64_t> seed;
  std::string source;
  // Decoder draws that yielded no activity before the first end token. They
  // carry no entries but still count toward sample size in validity reports.
  uint64_t degenerate_count = 0;

  size_t size() const { return schedules.size(); }
  size_t drawn() const { return schedules.size() + degenerate_count; }
};

}  // namespace schedsyn::core
