#include "schedsyn.h"

#include <sstream>
#include <string>

#include "core/error.hpp"
#include "core/sample_io.hpp"
#include "core/schedule.hpp"
#include "encoding/encoding.hpp"
#include "eval/report.hpp"
#include "ingest/ingest.hpp"
#include "oracle/grammar.hpp"
#include "pipeline/experiment.hpp"
#include "pipeline/generate.hpp"
#include "pipeline/train.hpp"
#include "vae/model.hpp"

using namespace schedsyn;

struct schedsyn_sample {
  core::ScheduleSample value;
};

struct schedsyn_model {
  vae::VaeModel value;
};

namespace {

thread_local std::string g_last_error;

schedsyn_status fail(schedsyn_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
schedsyn_status guarded(Fn&& fn) {
  try {
    fn();
    return SCHEDSYN_OK;
  } catch (const NumericError& e) {
    return fail(SCHEDSYN_ERR_NUMERIC, e.what());
  } catch (const DataError& e) {
    return fail(SCHEDSYN_ERR_DATA, e.what());
  } catch (const std::logic_error& e) {
    return fail(SCHEDSYN_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(SCHEDSYN_ERR_IO, e.what());
  }
}

schedsyn_status require(bool ok, const char* what) {
  return ok ? SCHEDSYN_OK : fail(SCHEDSYN_ERR_USAGE, std::string("null argument: ") + what);
}

std::vector<int> parse_steps(const char* steps_csv) {
  std::vector<int> steps;
  std::stringstream ss(steps_csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    steps.push_back(std::stoi(token));
  }
  return steps;
}

}  // namespace

extern "C" {

const char* schedsyn_last_error(void) { return g_last_error.c_str(); }

schedsyn_status schedsyn_sample_load(const char* path, schedsyn_sample** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return guarded([&] { *out = new schedsyn_sample{core::load_sample(path)}; });
}

schedsyn_status schedsyn_sample_save(const schedsyn_sample* sample, const char* path) {
  if (auto s = require(sample && path, "sample/path")) return s;
  return guarded([&] { core::save_sample(sample->value, path); });
}

schedsyn_status schedsyn_sample_size(const schedsyn_sample* sample, uint64_t* out) {
  if (auto s = require(sample && out, "sample/out")) return s;
  *out = sample->value.schedules.size();
  return SCHEDSYN_OK;
}

schedsyn_status schedsyn_sample_degenerate(const schedsyn_sample* sample, uint64_t* out) {
  if (auto s = require(sample && out, "sample/out")) return s;
  *out = sample->value.degenerate_count;
  return SCHEDSYN_OK;
}

void schedsyn_sample_free(schedsyn_sample* sample) { delete sample; }

schedsyn_status schedsyn_ingest(const char* diaries_csv, const char* labelmap_csv,
                                schedsyn_sample** out, uint64_t* dropped_non_home_based,
                                uint64_t* merged, uint64_t* dropped_bad_tiling) {
  if (auto s = require(diaries_csv && labelmap_csv && out, "paths/out")) return s;
  return guarded([&] {
    const auto labels = ingest::LabelMap::from_csv(labelmap_csv);
    ingest::IngestReport report;
    *out = new schedsyn_sample{ingest::ingest_csv(diaries_csv, labels, &report)};
    if (dropped_non_home_based) *dropped_non_home_based = report.clean.dropped_non_home_based;
    if (merged) *merged = report.clean.merged_schedules;
    if (dropped_bad_tiling) *dropped_bad_tiling = report.dropped_bad_tiling;
  });
}

schedsyn_status schedsyn_oracle_draw(const char* spec_path, uint64_t count, uint64_t seed,
                                     schedsyn_sample** out) {
  if (auto s = require(out != nullptr, "out")) return s;
  return guarded([&] {
    const auto spec = spec_path ? oracle::GrammarSpec::from_file(spec_path)
                                : oracle::GrammarSpec::builtin_default();
    *out = new schedsyn_sample{oracle::draw_sample(spec, count, seed)};
  });
}

schedsyn_status schedsyn_train(const char* config_path, const schedsyn_sample* data,
                               uint64_t seed, int threads, const char* checkpoint_out) {
  if (auto s = require(config_path && data && checkpoint_out, "config/data/out")) return s;
  return guarded([&] {
    const auto cfg = vae::load_model_config(config_path);
    const auto [train_sample, val_sample] = ingest::split_train_val(data->value, 0.9, seed);
    auto model = pipeline::train(cfg, train_sample, val_sample, seed, nullptr, threads);
    model.save(checkpoint_out);
  });
}

schedsyn_status schedsyn_model_load(const char* path, schedsyn_model** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return guarded([&] { *out = new schedsyn_model{vae::VaeModel::load(path)}; });
}

void schedsyn_model_free(schedsyn_model* model) { delete model; }

schedsyn_status schedsyn_generate(schedsyn_model* model, uint64_t count, uint64_t seed,
                                  schedsyn_sample** out) {
  if (auto s = require(model && out, "model/out")) return s;
  return guarded(
      [&] { *out = new schedsyn_sample{pipeline::generate(model->value, count, seed)}; });
}

schedsyn_status schedsyn_dump_encodings(const char* config_path, const schedsyn_sample* data,
                                        const char* out_path) {
  if (auto s = require(config_path && data && out_path, "config/data/out")) return s;
  return guarded([&] {
    const auto cfg = vae::load_model_config(config_path);
    core::ScheduleSample round_tripped;
    round_tripped.kind = data->value.kind;
    round_tripped.source = "encoding round-trip";
    for (const auto& schedule : data->value.schedules) {
      if (cfg.encoding == vae::EncodingKind::Discrete) {
        round_tripped.schedules.push_back(
            encoding::decode_discrete(encoding::encode_discrete(schedule, cfg.step_min)));
      } else {
        round_tripped.schedules.push_back(
            encoding::decode_continuous(encoding::encode_continuous(schedule).tokens));
      }
    }
    core::save_sample(round_tripped, out_path);
  });
}

schedsyn_status schedsyn_evaluate(const schedsyn_sample* real, const schedsyn_sample* synthetic,
                                  const schedsyn_sample* training, const char* out_dir) {
  if (auto s = require(real && synthetic && out_dir, "real/synthetic/out_dir")) return s;
  return guarded([&] {
    const auto& train_ref = training ? training->value : real->value;
    const auto report = eval::evaluate(real->value, synthetic->value, train_ref);
    eval::write_eval_outputs(report, real->value, synthetic->value, out_dir);
  });
}

schedsyn_status schedsyn_experiment(const char* config_path, const schedsyn_sample* data,
                                    const char* out_dir, int runs, uint64_t seed, int threads) {
  if (auto s = require(config_path && data && out_dir, "config/data/out_dir")) return s;
  return guarded([&] {
    const auto cfg = vae::load_model_config(config_path);
    pipeline::ExperimentOptions options;
    options.runs = runs;
    options.master_seed = seed;
    options.threads = threads;
    pipeline::run_experiment(cfg, data->value, out_dir, options);
  });
}

schedsyn_status schedsyn_sweep(const char* config_path, const schedsyn_sample* data,
                               const char* steps_csv, const char* out_dir, int runs,
                               uint64_t seed, int threads) {
  if (auto s = require(config_path && data && steps_csv && out_dir, "config/data/steps/out"))
    return s;
  return guarded([&] {
    const auto cfg = vae::load_model_config(config_path);
    pipeline::ExperimentOptions options;
    options.runs = runs;
    options.master_seed = seed;
    options.threads = threads;
    pipeline::step_size_sweep(cfg, data->value, parse_steps(steps_csv), out_dir, options);
  });
}

}  // extern "C"
