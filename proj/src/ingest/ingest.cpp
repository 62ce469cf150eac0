#include "ingest/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace schedsyn::ingest {

using core::Activity;
using core::Schedule;
using core::ScheduleSample;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    size_t b = 0;
    while (b < field.size() && field[b] == ' ') ++b;
    fields.push_back(field.substr(b));
  }
  return fields;
}

int to_int(const std::string& s, const std::string& context) {
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": bad integer '" + s + "'");
  }
}

}  // namespace

Activity LabelMap::lookup(const std::string& raw) const {
  const auto it = map_.find(raw);
  if (it == map_.end()) throw DataError("unmapped activity label '" + raw + "'");
  return it->second;
}

LabelMap LabelMap::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label map '" + path + "'");
  LabelMap map;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (lineno == 1 && fields.size() >= 2 && fields[0] == "raw") continue;
    if (fields.size() != 2) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected raw,canonical");
    }
    const auto act = core::activity_from_label(fields[1]);
    if (!act) {
      throw DataError(path + ":" + std::to_string(lineno) + ": unknown canonical label '" +
                      fields[1] + "'");
    }
    map.add(fields[0], *act);
  }
  return map;
}

Schedule absorb_trips(const std::vector<DiaryRow>& rows, const LabelMap& labels) {
  if (rows.empty()) throw DataError("absorb_trips: no rows");
  Schedule s;
  int clock = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const DiaryRow& r = rows[i];
    const std::string context = "person " + r.pid + " day " + r.day;
    if (r.start_min < 0 || r.end_min > core::kDayMinutes || r.start_min > r.end_min ||
        r.trip_min < 0) {
      throw DataError(context + ": bad row times");
    }
    if (r.start_min != clock) {
      throw DataError(context + ": activities and trips do not tile the day (at minute " +
                      std::to_string(clock) + ", next activity starts " +
                      std::to_string(r.start_min) + ")");
    }
    // Each activity absorbs its following trip; a trailing trip after the
    // last activity is folded in the same way.
    const int duration = r.end_min - r.start_min + r.trip_min;
    clock = r.end_min + r.trip_min;
    s.entries.push_back({labels.lookup(r.activity), duration});
  }
  if (clock != core::kDayMinutes) {
    throw DataError("person " + rows[0].pid + " day " + rows[0].day +
                    ": day ends at minute " + std::to_string(clock) + ", expected " +
                    std::to_string(core::kDayMinutes));
  }
  return s;
}

ScheduleSample clean(const ScheduleSample& sample, CleanReport* report) {
  CleanReport local;
  ScheduleSample out;
  out.kind = sample.kind;
  out.seed = sample.seed;
  out.source = sample.source;
  const bool keep_ids = sample.ids.size() == sample.schedules.size();
  for (size_t i = 0; i < sample.schedules.size(); ++i) {
    const Schedule& s = sample.schedules[i];
    if (!core::is_home_based(s)) {
      ++local.dropped_non_home_based;
      continue;
    }
    Schedule merged = core::merge_consecutive(s, core::kStructuralMergeSet);
    if (merged.entries.size() != s.entries.size()) ++local.merged_schedules;
    out.schedules.push_back(std::move(merged));
    if (keep_ids) out.ids.push_back(sample.ids[i]);
  }
  if (report) *report = local;
  return out;
}

ScheduleSample ingest_csv(const std::string& diaries_path, const LabelMap& labels,
                          IngestReport* report) {
  std::ifstream in(diaries_path);
  if (!in) throw DataError("cannot open diaries file '" + diaries_path + "'");

  // Rows grouped by (pid, day), preserving first-seen order of groups.
  std::vector<std::pair<std::pair<std::string, std::string>, std::vector<DiaryRow>>> groups;
  std::map<std::pair<std::string, std::string>, size_t> index;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (lineno == 1 && !fields.empty() && fields[0] == "pid") continue;
    if (fields.size() != 6) {
      throw DataError(diaries_path + ":" + std::to_string(lineno) +
                      ": expected pid,day,act,start_min,end_min,trip_min");
    }
    const std::string context = diaries_path + ":" + std::to_string(lineno);
    DiaryRow row{fields[0], fields[1], fields[2], to_int(fields[3], context),
                 to_int(fields[4], context), to_int(fields[5], context)};
    const auto key = std::make_pair(row.pid, row.day);
    const auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, groups.size());
      groups.push_back({key, {std::move(row)}});
    } else {
      groups[it->second].second.push_back(std::move(row));
    }
  }

  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  IngestReport local;
  ScheduleSample raw;
  raw.kind = core::SampleKind::Real;
  raw.source = diaries_path;
  for (auto& [key, rows] : groups) {
    ++local.person_days;
    std::stable_sort(rows.begin(), rows.end(),
                     [](const DiaryRow& a, const DiaryRow& b) { return a.start_min < b.start_min; });
    try {
      raw.schedules.push_back(absorb_trips(rows, labels));
      raw.ids.push_back(key.first);
    } catch (const DataError&) {
      ++local.dropped_bad_tiling;  // filtered, not repaired
    }
  }

  ScheduleSample cleaned = clean(raw, &local.clean);
  if (report) *report = local;
  return cleaned;
}

std::pair<ScheduleSample, ScheduleSample> split_train_val(const ScheduleSample& sample,
                                                          double fraction, uint64_t seed) {
  const size_t n = sample.schedules.size();
  if (n < 10) {
    throw DataError("split_train_val: sample too small (" + std::to_string(n) + " < 10)");
  }
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng::Sequence seq(rng::key(seed, rng::Stream::Split));
  rng::shuffle(perm, seq);

  const size_t n_train = static_cast<size_t>(fraction * static_cast<double>(n));
  const bool keep_ids = sample.ids.size() == n;
  ScheduleSample train, val;
  for (auto* part : {&train, &val}) {
    part->kind = sample.kind;
    part->seed = seed;
    part->source = sample.source;
  }
  for (size_t i = 0; i < n; ++i) {
    ScheduleSample& dst = (i < n_train) ? train : val;
    dst.schedules.push_back(sample.schedules[perm[i]]);
    if (keep_ids) dst.ids.push_back(sample.ids[perm[i]]);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace schedsyn::ingest
