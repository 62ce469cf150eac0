#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/schedule.hpp"

namespace schedsyn::eval {

// Distribution of per-schedule occurrence counts (rates). `frequency` is the
// total number of occurrences across the sample, used for segment weighting.
struct RateDistribution {
  std::vector<double> mass;  // index = count, 0..max observed
  double frequency = 0.0;
  double mean = 0.0;
  uint64_t schedules = 0;

  static RateDistribution point_at_zero(uint64_t schedules);
};

// Probability histogram over [0,1] days in five-minute bins; the mean is
// tracked before binning.
struct TimeDistribution {
  static constexpr int kBins = 288;
  std::vector<double> mass;  // kBins entries
  double frequency = 0.0;    // observation count
  double mean = 0.0;         // days
};

// Joint five-minute histogram; the descriptive metric is the expected sum of
// the two coordinates, again pre-binning.
struct BivariateTimeDistribution {
  static constexpr int kBins = TimeDistribution::kBins;
  std::vector<double> mass;  // kBins * kBins
  double frequency = 0.0;
  double mean_sum = 0.0;  // days
};

using EnumeratedActivity = std::pair<core::Activity, int>;  // (type, occurrence index)
using ActivityPair = std::pair<core::Activity, core::Activity>;  // unordered, first <= second
using Gram = std::vector<core::Activity>;

std::string segment_label(const EnumeratedActivity& e);  // home0, work1, ...
std::string segment_label(const ActivityPair& p);        // home+work
std::string segment_label(const Gram& g);                // home-work-home

// All marginal distributions of one sample (degenerate draws carry no
// activities and are skipped here; they only matter for validity).
struct SampleMarginals {
  uint64_t schedule_count = 0;
  RateDistribution lengths;
  std::array<RateDistribution, core::kActivityCount> participation;
  std::map<ActivityPair, RateDistribution> pair_participation;
  std::map<Gram, RateDistribution> ngrams[3];  // 2-, 3-, 4-grams
  std::map<EnumeratedActivity, TimeDistribution> start_times;
  std::map<EnumeratedActivity, TimeDistribution> durations;
  std::array<BivariateTimeDistribution, core::kActivityCount> start_durations;
  std::array<BivariateTimeDistribution, core::kActivityCount> consecutive_durations;
};

SampleMarginals extract_marginals(const core::ScheduleSample& sample);

// Exposed for the worked-example tests.
RateDistribution length_rates(const core::ScheduleSample& sample);
std::array<RateDistribution, core::kActivityCount> participation_rates(
    const core::ScheduleSample& sample);
std::map<ActivityPair, RateDistribution> pair_participation_rates(
    const core::ScheduleSample& sample);
std::map<Gram, RateDistribution> ngram_rates(const core::ScheduleSample& sample, int n);

}  // namespace schedsyn::eval
