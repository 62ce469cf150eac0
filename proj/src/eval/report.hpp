#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eval/distance.hpp"
#include "eval/marginals.hpp"

namespace schedsyn::eval {

struct SegmentRow {
  std::string domain;
  std::string distribution;
  std::string segment;
  double description_real = 0.0;
  double description_syn = 0.0;
  double distance = 0.0;
  double weight = 0.0;  // real-sample frequency; synthetic when real is absent
  std::string unit;
};

struct DistributionSummary {
  std::string domain;
  std::string distribution;
  double distance = 0.0;
  std::string unit;
};

struct ValidityStats {
  double not_home_based = 0.0;
  double forbidden_consecutive = 0.0;
  double invalid = 0.0;  // union, not sum
  uint64_t novel = 0;    // denominator, degenerate draws included
  uint64_t degenerate = 0;
};

struct CreativityStats {
  double homogeneity = 0.0;   // P(sequence repeated within the synthetic sample)
  double conservatism = 0.0;  // P(sequence occurs in the training sample)
  double creativity = 0.0;    // combined metric
};

// Per-segment distances rolled up to distribution and domain level per the
// frequency-weighted scheme, plus validity and creativity probabilities.
struct EvalReport {
  std::vector<SegmentRow> rows;
  std::vector<DistributionSummary> distributions;
  double participations = 0.0;  // rate EMD
  double transitions = 0.0;     // rate EMD
  double timing = 0.0;          // days
  ValidityStats validity;
  CreativityStats creativity;
  uint64_t real_count = 0;
  uint64_t syn_count = 0;
};

// Frequency-weighted mean of segment distances (weights from the real
// sample; synthetic-only segments carry their synthetic frequency).
double weighted_summary(std::span<const double> distances, std::span<const double> weights);

// Domain roll-up: unweighted mean of its distribution-level summaries.
double domain_mean(std::span<const double> distribution_summaries);

// Combined creativity metric from its two components.
double combine_creativity(double homogeneity, double conservatism);

ValidityStats invalidity(const core::ScheduleSample& synthetic,
                         const core::ScheduleSample& training);
CreativityStats creativity(const core::ScheduleSample& synthetic,
                           const core::ScheduleSample& training);

// Full comparison. `training` is the novelty reference for validity and
// creativity; density marginals compare `synthetic` against `real`.
EvalReport evaluate(const core::ScheduleSample& real, const core::ScheduleSample& synthetic,
                    const core::ScheduleSample& training);
inline EvalReport evaluate(const core::ScheduleSample& real,
                           const core::ScheduleSample& synthetic) {
  return evaluate(real, synthetic, real);
}

void write_report_csv(const EvalReport& report, std::ostream& out);
void write_summary_csv(const EvalReport& report, std::ostream& out);

// report.csv + summary.csv + the two SVG figures under `out_dir`.
void write_eval_outputs(const EvalReport& report, const core::ScheduleSample& real,
                        const core::ScheduleSample& synthetic, const std::string& out_dir);

}  // namespace schedsyn::eval
