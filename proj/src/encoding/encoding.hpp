#pragma once

#include <cstdint>
#include <vector>

#include "core/schedule.hpp"

namespace schedsyn::encoding {

// Token vocabulary shared by both encodings. The discrete pathway uses only
// the activity ids; the sequence framing tokens exist for the continuous one.
struct Vocab {
  static constexpr int kSos = 8;
  static constexpr int kEos = 9;
  static constexpr int kSize = 10;
};

// Fixed-length vector of activity ids, one per time bin of `step_min` minutes.
struct DiscreteEncoding {
  std::vector<uint8_t> tokens;
  int step_min = 10;

  int length() const { return static_cast<int>(tokens.size()); }
};

struct ContinuousToken {
  int symbol = Vocab::kEos;   // activity id, kSos or kEos
  double duration = 0.0;      // fraction of a day in [0, 1]
};

// [SOS,0], one token per activity, EOS padding up to kMaxLen.
struct ContinuousEncoding {
  static constexpr int kMaxLen = 16;
  std::vector<ContinuousToken> tokens;
};

// Per bin the token is the activity occupying the most minutes of that bin;
// ties go to the activity that starts earliest within the bin. `step_min`
// must divide 1440.
DiscreteEncoding encode_discrete(const core::Schedule& s, int step_min = 10);

// Run-length merge: consecutive equal tokens become one activity. The output
// can never contain consecutive equal activity types.
core::Schedule decode_discrete(const DiscreteEncoding& e);

// Raises DataError when the schedule has more than kMaxLen - 1 activities.
ContinuousEncoding encode_continuous(const core::Schedule& s);

// Tolerant inverse for raw model output: SOS tokens are ignored, everything
// from the first EOS on is ignored, remaining durations are renormalised to
// one day and rounded to minutes. Raises DataError when no activity precedes
// the first EOS (degenerate output).
core::Schedule decode_continuous(const std::vector<ContinuousToken>& raw);

}  // namespace schedsyn::encoding
