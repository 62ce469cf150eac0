#include "encoding/encoding.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace schedsyn::encoding {

using core::Activity;
using core::kDayMinutes;
using core::Schedule;

DiscreteEncoding encode_discrete(const Schedule& s, int step_min) {
  if (step_min <= 0 || kDayMinutes % step_min != 0) {
    throw DataError("encode_discrete: step " + std::to_string(step_min) +
                    " does not divide " + std::to_string(kDayMinutes));
  }
  if (const auto v = core::validate(s); !v.ok) {
    throw DataError("encode_discrete: " + v.violation);
  }

  const int bins = kDayMinutes / step_min;
  DiscreteEncoding enc;
  enc.step_min = step_min;
  enc.tokens.resize(static_cast<size_t>(bins));

  const auto starts = s.start_times();
  size_t first = 0;  // first entry that may overlap the current bin
  for (int b = 0; b < bins; ++b) {
    const int bin_start = b * step_min;
    const int bin_end = bin_start + step_min;
    while (first < s.entries.size() &&
           starts[first] + s.entries[first].duration_min <= bin_start) {
      ++first;
    }
    // Greatest overlap wins; the strict compare keeps the earliest-starting
    // activity on ties.
    int best_overlap = 0;
    int best_token = -1;
    for (size_t i = first; i < s.entries.size() && starts[i] < bin_end; ++i) {
      const int end = starts[i] + s.entries[i].duration_min;
      const int overlap = std::min(end, bin_end) - std::max(starts[i], bin_start);
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_token = static_cast<int>(s.entries[i].activity);
      }
    }
    enc.tokens[static_cast<size_t>(b)] = static_cast<uint8_t>(best_token);
  }
  return enc;
}

Schedule decode_discrete(const DiscreteEncoding& e) {
  if (e.tokens.empty() || e.step_min <= 0 ||
      e.length() * e.step_min != kDayMinutes) {
    throw DataError("decode_discrete: tokens do not cover the day");
  }
  Schedule s;
  for (const uint8_t token : e.tokens) {
    if (token >= core::kActivityCount) {
      throw DataError("decode_discrete: invalid token " + std::to_string(token));
    }
    const auto act = static_cast<Activity>(token);
    if (!s.entries.empty() && s.entries.back().activity == act) {
      s.entries.back().duration_min += e.step_min;
    } else {
      s.entries.push_back({act, e.step_min});
    }
  }
  return s;
}

ContinuousEncoding encode_continuous(const Schedule& s) {
  if (const auto v = core::validate(s); !v.ok) {
    throw DataError("encode_continuous: " + v.violation);
  }
  if (s.entries.size() > ContinuousEncoding::kMaxLen - 1) {
    throw DataError("encode_continuous: schedule has " + std::to_string(s.entries.size()) +
                    " activities, capacity is " +
                    std::to_string(ContinuousEncoding::kMaxLen - 1));
  }
  ContinuousEncoding enc;
  enc.tokens.reserve(ContinuousEncoding::kMaxLen);
  enc.tokens.push_back({Vocab::kSos, 0.0});
  for (const auto& entry : s.entries) {
    enc.tokens.push_back({static_cast<int>(entry.activity),
                          static_cast<double>(entry.duration_min) / kDayMinutes});
  }
  while (enc.tokens.size() < ContinuousEncoding::kMaxLen) {
    enc.tokens.push_back({Vocab::kEos, 0.0});
  }
  return enc;
}

Schedule decode_continuous(const std::vector<ContinuousToken>& raw) {
  std::vector<std::pair<Activity, double>> kept;
  for (const auto& token : raw) {
    if (token.symbol == Vocab::kEos) break;  // everything after the first EOS is ignored
    if (token.symbol == Vocab::kSos) continue;
    if (token.symbol < 0 || token.symbol >= core::kActivityCount) {
      throw DataError("decode_continuous: invalid symbol " + std::to_string(token.symbol));
    }
    kept.push_back({static_cast<Activity>(token.symbol), std::max(token.duration, 0.0)});
  }
  if (kept.empty()) {
    throw DataError("decode_continuous: degenerate output, no activity before EOS");
  }
  double total = 0.0;
  for (const auto& [act, d] : kept) total += d;
  if (total <= 0.0) {
    throw DataError("decode_continuous: degenerate output, zero total duration");
  }
  for (auto& [act, d] : kept) d /= total;
  return core::round_to_minutes(kept);
}

}  // namespace schedsyn::encoding
