#pragma once

#include <string>
#include <vector>

#include "core/schedule.hpp"
#include "eval/report.hpp"
#include "vae/config.hpp"

namespace schedsyn::pipeline {

struct ExperimentOptions {
  int runs = 5;
  uint64_t master_seed = 1;
  int threads = 1;
  double train_fraction = 0.9;
  bool log_progress = false;  // epoch lines on stderr
};

struct RunMetrics {
  double participations = 0.0;
  double transitions = 0.0;
  double timing = 0.0;
  double not_home_based = 0.0;
  double consecutive = 0.0;
  double invalid = 0.0;
  double homogeneity = 0.0;
  double conservatism = 0.0;
  double creativity = 0.0;
};

struct ExperimentResult {
  std::vector<RunMetrics> runs;
};

RunMetrics metrics_from_report(const eval::EvalReport& report);

// Per run: train on a fixed 90/10 split of `data`, generate a synthetic
// sample matching |data|, evaluate against the full sample, and write the
// run's artifacts under out_dir/run<k>/. The cross-run mean/std lands in
// out_dir/summary.csv (Table-6 shape). Run seeds derive from the master seed;
// the split is shared so runs differ only in training and sampling noise.
ExperimentResult run_experiment(const vae::ModelConfig& cfg, const core::ScheduleSample& data,
                                const std::string& out_dir, const ExperimentOptions& options);

// Ranks with ties sharing the minimum rank: values {2,1,1,3} -> {3,1,1,4}.
std::vector<int> min_rank(const std::vector<double>& values);

// Re-trains a discrete config for every step size and writes sweep.csv
// (metric values) and ranking.csv (per-metric ranks) under out_dir.
void step_size_sweep(const vae::ModelConfig& cfg, const core::ScheduleSample& data,
                     const std::vector<int>& steps, const std::string& out_dir,
                     const ExperimentOptions& options);

}  // namespace schedsyn::pipeline
