#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/schedule.hpp"
#include "eval/report.hpp"

namespace schedsyn::oracle {

// Ground-truth schedule generator with a known distribution: weighted
// whole-day templates whose slot durations are truncated normals, rescaled to
// tile the day. Every template must be home-based with no consecutive
// home/work/education runs.
struct SlotSpec {
  core::Activity activity{core::Activity::Home};
  double mean_min = 0.0;
  double sd_min = 0.0;
};

struct TemplateSpec {
  std::string name;
  double weight = 0.0;
  std::vector<SlotSpec> slots;
};

struct GrammarSpec {
  std::vector<TemplateSpec> templates;

  void check() const;  // weights sum to 1, templates structurally valid
  static GrammarSpec from_file(const std::string& path);
  static GrammarSpec parse(std::istream& in, const std::string& origin);
  // A default grammar mixing short (escort) and long (work) activities.
  static GrammarSpec builtin_default();
};

// n i.i.d. schedules, deterministic per seed: weighted template pick, slot
// durations from truncated normals, proportional rescale to 1440 minutes,
// largest-remainder rounding.
core::ScheduleSample draw_sample(const GrammarSpec& spec, uint64_t n, uint64_t seed);

// Null reference for benchmarking: templates drawn uniformly and slot
// durations uniform on (0, 1) before rescaling.
core::ScheduleSample draw_uniform_null(const GrammarSpec& spec, uint64_t n, uint64_t seed);

// Exact 1-D transport cost by greedy supply/demand sweep; test oracle for the
// CDF-based distance (small supports).
double brute_force_emd(std::span<const double> p, std::span<const double> q, double spacing);

// Noise floor: the sample is split into two disjoint halves which are
// evaluated against each other. Requires at least 1000 schedules.
eval::EvalReport resample_baseline(const core::ScheduleSample& sample, uint64_t seed);

}  // namespace schedsyn::oracle
