#include "pipeline/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/sample_io.hpp"
#include "ingest/ingest.hpp"
#include "pipeline/generate.hpp"
#include "pipeline/train.hpp"

namespace schedsyn::pipeline {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

uint64_t run_seed(uint64_t master, int run) {
  return rng::mix(master + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(run + 1));
}

void write_train_csv(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "epoch,train_total,train_ce,train_mse,train_kl,val_total,val_ce,val_mse,val_kl\n";
  for (size_t e = 0; e < report.train_losses.size(); ++e) {
    const auto& tr = report.train_losses[e];
    const auto& va = report.val_losses[e];
    out << e << ',' << fmt(tr.total) << ',' << fmt(tr.ce) << ',' << fmt(tr.mse) << ','
        << fmt(tr.kl) << ',' << fmt(va.total) << ',' << fmt(va.ce) << ',' << fmt(va.mse) << ','
        << fmt(va.kl) << '\n';
  }
  out << "# best_epoch=" << report.best_epoch << " best_val=" << fmt(report.best_val)
      << " steps=" << report.steps << " wall_seconds=" << fmt(report.wall_seconds) << '\n';
}

struct MetricColumn {
  const char* name;
  const char* unit;
  double RunMetrics::* field;
};

constexpr MetricColumn kMetricColumns[] = {
    {"participations", "rate EMD", &RunMetrics::participations},
    {"transitions", "rate EMD", &RunMetrics::transitions},
    {"timing", "days", &RunMetrics::timing},
    {"not_home_based", "prob", &RunMetrics::not_home_based},
    {"consecutive", "prob", &RunMetrics::consecutive},
    {"invalid", "prob", &RunMetrics::invalid},
    {"homogeneity", "prob", &RunMetrics::homogeneity},
    {"conservatism", "prob", &RunMetrics::conservatism},
    {"creativity", "prob", &RunMetrics::creativity},
};

}  // namespace

RunMetrics metrics_from_report(const eval::EvalReport& report) {
  RunMetrics m;
  m.participations = report.participations;
  m.transitions = report.transitions;
  m.timing = report.timing;
  m.not_home_based = report.validity.not_home_based;
  m.consecutive = report.validity.forbidden_consecutive;
  m.invalid = report.validity.invalid;
  m.homogeneity = report.creativity.homogeneity;
  m.conservatism = report.creativity.conservatism;
  m.creativity = report.creativity.creativity;
  return m;
}

ExperimentResult run_experiment(const vae::ModelConfig& cfg, const core::ScheduleSample& data,
                                const std::string& out_dir, const ExperimentOptions& options) {
  if (options.runs < 1) throw DataError("experiment: runs must be >= 1");
  cfg.check();
  std::filesystem::create_directories(out_dir);

  // one split shared by every run: runs differ only in training and sampling
  const auto [train_sample, val_sample] =
      ingest::split_train_val(data, options.train_fraction, options.master_seed);

  ExperimentResult result;
  for (int run = 0; run < options.runs; ++run) {
    const uint64_t seed = run_seed(options.master_seed, run);
    const std::string run_dir = out_dir + "/run" + std::to_string(run);
    std::filesystem::create_directories(run_dir);

    TrainReport train_report;
    EpochHook hook;
    if (options.log_progress) {
      hook = [run](int epoch, const EpochLoss& tr, const EpochLoss& va) {
        std::fprintf(stderr, "[run %d] epoch %d train %.4f val %.4f\n", run, epoch, tr.total,
                     va.total);
      };
    }
    auto model =
        train(cfg, train_sample, val_sample, seed, &train_report, options.threads, hook);
    model.save(run_dir + "/model.ckpt");
    write_train_csv(train_report, run_dir + "/train.csv");

    auto synthetic = generate(model, data.schedules.size(), seed);
    core::save_sample(synthetic, run_dir + "/sample.txt");

    const auto report = eval::evaluate(data, synthetic, train_sample);
    eval::write_eval_outputs(report, data, synthetic, run_dir);
    result.runs.push_back(metrics_from_report(report));
  }

  std::ofstream summary(out_dir + "/summary.csv");
  if (!summary) throw DataError("cannot write " + out_dir + "/summary.csv");
  summary << "metric,mean,std,unit\n";
  const double n = static_cast<double>(result.runs.size());
  for (const auto& col : kMetricColumns) {
    double mean = 0.0;
    for (const auto& r : result.runs) mean += r.*(col.field);
    mean /= n;
    summary << col.name << ',' << fmt(mean) << ',';
    if (result.runs.size() > 1) {
      double var = 0.0;
      for (const auto& r : result.runs) {
        const double d = r.*(col.field) - mean;
        var += d * d;
      }
      summary << fmt(std::sqrt(var / (n - 1.0)));
    }
    summary << ',' << col.unit << '\n';
  }
  return result;
}

std::vector<int> min_rank(const std::vector<double>& values) {
  std::vector<int> rank(values.size(), 0);
  for (size_t i = 0; i < values.size(); ++i) {
    int better = 0;
    for (size_t j = 0; j < values.size(); ++j) {
      if (values[j] < values[i]) ++better;
    }
    rank[i] = better + 1;  // ties share the minimum rank
  }
  return rank;
}

void step_size_sweep(const vae::ModelConfig& cfg, const core::ScheduleSample& data,
                     const std::vector<int>& steps, const std::string& out_dir,
                     const ExperimentOptions& options) {
  if (cfg.encoding != vae::EncodingKind::Discrete) {
    throw DataError("sweep: the step-size sweep needs a discrete preset");
  }
  if (steps.empty()) throw DataError("sweep: no step sizes given");
  for (const int step : steps) {
    if (step <= 0 || core::kDayMinutes % step != 0) {
      throw DataError("sweep: step " + std::to_string(step) + " must divide 1440");
    }
  }
  std::filesystem::create_directories(out_dir);

  std::vector<RunMetrics> per_step;
  for (const int step : steps) {
    vae::ModelConfig step_cfg = cfg;
    step_cfg.step_min = step;
    ExperimentOptions step_options = options;
    const auto result =
        run_experiment(step_cfg, data, out_dir + "/step" + std::to_string(step), step_options);
    // mean across the sweep's runs
    RunMetrics mean;
    for (const auto& col : kMetricColumns) {
      double acc = 0.0;
      for (const auto& r : result.runs) acc += r.*(col.field);
      mean.*(col.field) = acc / static_cast<double>(result.runs.size());
    }
    per_step.push_back(mean);
  }

  const auto write_table = [&](const std::string& path, bool ranks) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "metric";
    for (const int step : steps) out << ',' << step << "min";
    out << '\n';
    for (const auto& col : kMetricColumns) {
      std::vector<double> values;
      for (const auto& m : per_step) values.push_back(m.*(col.field));
      out << col.name;
      if (ranks) {
        for (const int r : min_rank(values)) out << ',' << r;
      } else {
        for (const double v : values) out << ',' << fmt(v);
      }
      out << '\n';
    }
  };
  write_table(out_dir + "/sweep.csv", false);
  write_table(out_dir + "/ranking.csv", true);
}

}  // namespace schedsyn::pipeline
