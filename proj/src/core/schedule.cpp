#include "core/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace schedsyn::core {

namespace {
constexpr std::array<std::string_view, kActivityCount> kLabels = {
    "home", "work", "education", "medical", "escort", "other", "visit", "shop"};
}

std::string_view activity_label(Activity a) {
  return kLabels[static_cast<size_t>(a)];
}

std::optional<Activity> activity_from_label(std::string_view label) {
  for (size_t i = 0; i < kLabels.size(); ++i) {
    if (kLabels[i] == label) return static_cast<Activity>(i);
  }
  return std::nullopt;
}

int Schedule::total_minutes() const {
  int total = 0;
  for (const auto& e : entries) total += e.duration_min;
  return total;
}

std::vector<int> Schedule::start_times() const {
  std::vector<int> starts(entries.size());
  int t = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    starts[i] = t;
    t += entries[i].duration_min;
  }
  return starts;
}

Verdict validate(const Schedule& s) {
  if (s.entries.empty()) return {false, "empty schedule"};
  for (size_t i = 0; i < s.entries.size(); ++i) {
    if (s.entries[i].duration_min < 0) {
      return {false, "negative duration at entry " + std::to_string(i)};
    }
  }
  const int total = s.total_minutes();
  if (total != kDayMinutes) {
    return {false, "duration-sum " + std::to_string(total) + " != " +
                       std::to_string(kDayMinutes)};
  }
  return {};
}

bool is_home_based(const Schedule& s) {
  return !s.entries.empty() && s.entries.front().activity == Activity::Home &&
         s.entries.back().activity == Activity::Home;
}

bool has_forbidden_consecutive(const Schedule& s) {
  for (size_t i = 1; i < s.entries.size(); ++i) {
    const Activity a = s.entries[i].activity;
    if (a == s.entries[i - 1].activity &&
        kStructuralMergeSet[static_cast<size_t>(a)]) {
      return true;
    }
  }
  return false;
}

ActivitySet make_activity_set(std::initializer_list<Activity> acts) {
  ActivitySet set{};
  for (Activity a : acts) set[static_cast<size_t>(a)] = true;
  return set;
}

Schedule merge_consecutive(const Schedule& s, const ActivitySet& types) {
  Schedule out;
  out.entries.reserve(s.entries.size());
  for (const auto& e : s.entries) {
    if (!out.entries.empty() && out.entries.back().activity == e.activity &&
        types[static_cast<size_t>(e.activity)]) {
      out.entries.back().duration_min += e.duration_min;
    } else {
      out.entries.push_back(e);
    }
  }
  return out;
}

Schedule round_to_minutes(const std::vector<std::pair<Activity, double>>& fractional_days,
                          bool strict) {
  if (fractional_days.empty()) throw DataError("round_to_minutes: empty schedule");
  double total = 0.0;
  for (const auto& [act, frac] : fractional_days) {
    if (frac < 0.0) throw DataError("round_to_minutes: negative duration");
    total += frac;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw DataError("round_to_minutes: durations sum to " + std::to_string(total) +
                    " days, expected 1");
  }

  const size_t n = fractional_days.size();
  std::vector<int> minutes(n);
  std::vector<double> remainder(n);
  int assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    const double exact = fractional_days[i].second * kDayMinutes;
    minutes[i] = static_cast<int>(std::floor(exact));
    remainder[i] = exact - minutes[i];
    assigned += minutes[i];
  }

  // Hand out the leftover minutes to the largest remainders, earliest first.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
  for (int left = kDayMinutes - assigned; left > 0; --left) {
    minutes[order[static_cast<size_t>(kDayMinutes - assigned - left)]] += 1;
  }

  Schedule out;
  for (size_t i = 0; i < n; ++i) {
    if (minutes[i] == 0) {
      if (strict) throw DataError("round_to_minutes: entry rounds to zero minutes");
      continue;
    }
    out.entries.push_back({fractional_days[i].first, minutes[i]});
  }
  if (out.entries.empty()) throw DataError("round_to_minutes: all entries round to zero");
  return out;
}

}  // namespace schedsyn::core
