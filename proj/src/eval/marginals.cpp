#include "eval/marginals.hpp"

#include <algorithm>

namespace schedsyn::eval {

using core::Activity;
using core::Schedule;
using core::ScheduleSample;

namespace {

constexpr double kDay = static_cast<double>(core::kDayMinutes);

void bump(std::vector<uint64_t>& counts, size_t index) {
  if (counts.size() <= index) counts.resize(index + 1, 0);
  ++counts[index];
}

RateDistribution finish_rates(const std::vector<uint64_t>& counts, uint64_t schedules) {
  RateDistribution d;
  d.schedules = schedules;
  if (schedules == 0) return d;
  d.mass.assign(std::max<size_t>(counts.size(), 1), 0.0);
  double total_count = 0.0;
  for (size_t c = 0; c < counts.size(); ++c) {
    d.mass[c] = static_cast<double>(counts[c]) / static_cast<double>(schedules);
    total_count += static_cast<double>(counts[c]) * static_cast<double>(c);
  }
  d.frequency = total_count;
  d.mean = total_count / static_cast<double>(schedules);
  return d;
}

int time_bin(double days) {
  const int bin = static_cast<int>(days * TimeDistribution::kBins);
  return std::clamp(bin, 0, TimeDistribution::kBins - 1);
}

struct TimeAcc {
  std::vector<uint64_t> bins = std::vector<uint64_t>(TimeDistribution::kBins, 0);
  double sum = 0.0;
  uint64_t n = 0;

  void add(double days) {
    ++bins[static_cast<size_t>(time_bin(days))];
    sum += days;
    ++n;
  }

  TimeDistribution finish() const {
    TimeDistribution d;
    d.mass.assign(TimeDistribution::kBins, 0.0);
    if (n == 0) return d;
    for (size_t b = 0; b < bins.size(); ++b) {
      d.mass[b] = static_cast<double>(bins[b]) / static_cast<double>(n);
    }
    d.frequency = static_cast<double>(n);
    d.mean = sum / static_cast<double>(n);
    return d;
  }
};

struct BivarAcc {
  std::map<std::pair<int, int>, uint64_t> cells;
  double sum = 0.0;
  uint64_t n = 0;

  void add(double x_days, double y_days) {
    ++cells[{time_bin(x_days), time_bin(y_days)}];
    sum += x_days + y_days;
    ++n;
  }

  BivariateTimeDistribution finish() const {
    BivariateTimeDistribution d;
    d.mass.assign(static_cast<size_t>(BivariateTimeDistribution::kBins) *
                      BivariateTimeDistribution::kBins,
                  0.0);
    if (n == 0) return d;
    for (const auto& [cell, count] : cells) {
      d.mass[static_cast<size_t>(cell.first) * BivariateTimeDistribution::kBins +
             cell.second] = static_cast<double>(count) / static_cast<double>(n);
    }
    d.frequency = static_cast<double>(n);
    d.mean_sum = sum / static_cast<double>(n);
    return d;
  }
};

std::array<int, core::kActivityCount> activity_counts(const Schedule& s) {
  std::array<int, core::kActivityCount> counts{};
  for (const auto& e : s.entries) ++counts[static_cast<size_t>(e.activity)];
  return counts;
}

}  // namespace

RateDistribution RateDistribution::point_at_zero(uint64_t schedules) {
  RateDistribution d;
  d.schedules = schedules;
  d.mass = {1.0};
  return d;
}

std::string segment_label(const EnumeratedActivity& e) {
  return std::string(core::activity_label(e.first)) + std::to_string(e.second);
}

std::string segment_label(const ActivityPair& p) {
  return std::string(core::activity_label(p.first)) + "+" +
         std::string(core::activity_label(p.second));
}

std::string segment_label(const Gram& g) {
  std::string label;
  for (size_t i = 0; i < g.size(); ++i) {
    if (i) label += '-';
    label += core::activity_label(g[i]);
  }
  return label;
}

RateDistribution length_rates(const ScheduleSample& sample) {
  std::vector<uint64_t> counts;
  for (const auto& s : sample.schedules) bump(counts, s.entries.size());
  return finish_rates(counts, sample.schedules.size());
}

std::array<RateDistribution, core::kActivityCount> participation_rates(
    const ScheduleSample& sample) {
  std::array<std::vector<uint64_t>, core::kActivityCount> counts;
  for (const auto& s : sample.schedules) {
    const auto acts = activity_counts(s);
    for (int a = 0; a < core::kActivityCount; ++a) {
      bump(counts[static_cast<size_t>(a)], static_cast<size_t>(acts[static_cast<size_t>(a)]));
    }
  }
  std::array<RateDistribution, core::kActivityCount> out;
  for (int a = 0; a < core::kActivityCount; ++a) {
    out[static_cast<size_t>(a)] =
        finish_rates(counts[static_cast<size_t>(a)], sample.schedules.size());
  }
  return out;
}

std::map<ActivityPair, RateDistribution> pair_participation_rates(const ScheduleSample& sample) {
  std::map<ActivityPair, std::vector<uint64_t>> counts;
  for (int a = 0; a < core::kActivityCount; ++a) {
    for (int b = a; b < core::kActivityCount; ++b) {
      counts[{static_cast<Activity>(a), static_cast<Activity>(b)}] = {};
    }
  }
  for (const auto& s : sample.schedules) {
    const auto acts = activity_counts(s);
    for (int a = 0; a < core::kActivityCount; ++a) {
      for (int b = a; b < core::kActivityCount; ++b) {
        const int na = acts[static_cast<size_t>(a)];
        const int nb = acts[static_cast<size_t>(b)];
        // same-type pairs are unordered combinations: C(n, 2)
        const int pairs = (a == b) ? na * (na - 1) / 2 : na * nb;
        bump(counts[{static_cast<Activity>(a), static_cast<Activity>(b)}],
             static_cast<size_t>(pairs));
      }
    }
  }
  std::map<ActivityPair, RateDistribution> out;
  for (auto& [key, vec] : counts) out[key] = finish_rates(vec, sample.schedules.size());
  return out;
}

std::map<Gram, RateDistribution> ngram_rates(const ScheduleSample& sample, int n) {
  std::map<Gram, std::vector<uint64_t>> counts;
  std::map<Gram, uint64_t> per_schedule;
  for (const auto& s : sample.schedules) {
    per_schedule.clear();
    if (static_cast<int>(s.entries.size()) >= n) {
      for (size_t i = 0; i + static_cast<size_t>(n) <= s.entries.size(); ++i) {
        Gram g;
        g.reserve(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) g.push_back(s.entries[i + static_cast<size_t>(j)].activity);
        ++per_schedule[std::move(g)];
      }
    }
    for (const auto& [gram, count] : per_schedule) {
      bump(counts[gram], static_cast<size_t>(count));
    }
  }
  // schedules without a given gram sit at count zero
  std::map<Gram, RateDistribution> out;
  const uint64_t total = sample.schedules.size();
  for (auto& [gram, vec] : counts) {
    uint64_t seen = 0;
    for (size_t c = 1; c < vec.size(); ++c) seen += vec[c];
    if (vec.empty()) vec = {0};
    vec[0] = total - seen;
    out[gram] = finish_rates(vec, total);
  }
  return out;
}

SampleMarginals extract_marginals(const ScheduleSample& sample) {
  SampleMarginals m;
  m.schedule_count = sample.schedules.size();
  m.lengths = length_rates(sample);
  m.participation = participation_rates(sample);
  m.pair_participation = pair_participation_rates(sample);
  for (int n = 2; n <= 4; ++n) m.ngrams[n - 2] = ngram_rates(sample, n);

  std::map<EnumeratedActivity, TimeAcc> starts;
  std::map<EnumeratedActivity, TimeAcc> durs;
  std::array<BivarAcc, core::kActivityCount> start_dur;
  std::array<BivarAcc, core::kActivityCount> consec_dur;

  for (const auto& s : sample.schedules) {
    std::array<int, core::kActivityCount> occurrence{};
    const auto start_min = s.start_times();
    for (size_t i = 0; i < s.entries.size(); ++i) {
      const Activity act = s.entries[i].activity;
      const int occ = occurrence[static_cast<size_t>(act)]++;
      const double start_days = static_cast<double>(start_min[i]) / kDay;
      const double dur_days = static_cast<double>(s.entries[i].duration_min) / kDay;
      starts[{act, occ}].add(start_days);
      durs[{act, occ}].add(dur_days);
      start_dur[static_cast<size_t>(act)].add(start_days, dur_days);
      if (i + 1 < s.entries.size()) {
        consec_dur[static_cast<size_t>(act)].add(
            dur_days, static_cast<double>(s.entries[i + 1].duration_min) / kDay);
      }
    }
  }

  for (const auto& [key, acc] : starts) m.start_times[key] = acc.finish();
  for (const auto& [key, acc] : durs) m.durations[key] = acc.finish();
  for (int a = 0; a < core::kActivityCount; ++a) {
    m.start_durations[static_cast<size_t>(a)] = start_dur[static_cast<size_t>(a)].finish();
    m.consecutive_durations[static_cast<size_t>(a)] =
        consec_dur[static_cast<size_t>(a)].finish();
  }
  return m;
}

}  // namespace schedsyn::eval
