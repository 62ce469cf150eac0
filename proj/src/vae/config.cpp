#include "vae/config.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "core/error.hpp"
#include "core/ini.hpp"
#include "core/schedule.hpp"
#include "encoding/encoding.hpp"

namespace schedsyn::vae {

std::string to_string(EncodingKind k) {
  return k == EncodingKind::Discrete ? "discrete" : "continuous";
}

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::FF: return "ff";
    case Architecture::CNN: return "cnn";
    default: return "rnn";
  }
}

int ModelConfig::sequence_length() const {
  if (encoding == EncodingKind::Discrete) return core::kDayMinutes / step_min;
  return encoding::ContinuousEncoding::kMaxLen;
}

int ModelConfig::class_count() const {
  return encoding == EncodingKind::Discrete ? core::kActivityCount : encoding::Vocab::kSize;
}

void ModelConfig::check() const {
  if (blocks < 1 || block_size < 2 || latent_size < 1) {
    throw DataError("model config: blocks/block_size/latent_size out of range");
  }
  if (step_min <= 0 || core::kDayMinutes % step_min != 0) {
    throw DataError("model config: step " + std::to_string(step_min) + " must divide 1440");
  }
  if (batch_size < 1 || learning_rate <= 0.0) {
    throw DataError("model config: bad batch size or learning rate");
  }
  if (dropout < 0.0 || dropout >= 1.0 || teacher_forcing < 0.0 || teacher_forcing > 1.0) {
    throw DataError("model config: dropout/teacher_forcing out of [0,1)");
  }
}

namespace {

struct PresetRow {
  const char* name;
  EncodingKind enc;
  Architecture arch;
  int blocks;
  int size;
  double lr;
  double beta;
};

// Block sizes, learning rates and loss weights per published tuning; latent 6,
// batch 1024, dropout 0.1 and alpha 200 (continuous) are shared.
constexpr PresetRow kPresets[] = {
    {"DiscFF", EncodingKind::Discrete, Architecture::FF, 3, 32, 0.001, 0.005},
    {"DiscCNN", EncodingKind::Discrete, Architecture::CNN, 6, 512, 0.01, 0.005},
    {"DiscRNN", EncodingKind::Discrete, Architecture::RNN, 4, 512, 0.001, 0.01},
    {"ContFF", EncodingKind::Continuous, Architecture::FF, 4, 128, 0.0001, 0.01},
    {"ContCNN", EncodingKind::Continuous, Architecture::CNN, 5, 128, 0.001, 0.01},
    {"ContRNN", EncodingKind::Continuous, Architecture::RNN, 4, 256, 0.001, 0.01},
    {"ContRNN-Mid", EncodingKind::Continuous, Architecture::RNN, 2, 256, 0.002, 0.005},
    {"ContRNN-Small", EncodingKind::Continuous, Architecture::RNN, 2, 128, 0.004, 0.0025},
    {"ContRNN-Tiny", EncodingKind::Continuous, Architecture::RNN, 2, 64, 0.008, 0.00125},
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw DataError("config: bad number '" + v + "' for " + key);
  }
}

int to_int(const std::string& v, const std::string& key) {
  const double d = to_double(v, key);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d) throw DataError("config: expected integer for " + key);
  return i;
}

}  // namespace

ModelConfig preset(const std::string& name) {
  const std::string want = lower(name);
  for (const auto& row : kPresets) {
    if (lower(row.name) == want) {
      ModelConfig cfg;
      cfg.encoding = row.enc;
      cfg.architecture = row.arch;
      cfg.blocks = row.blocks;
      cfg.block_size = row.size;
      cfg.learning_rate = row.lr;
      cfg.beta = row.beta;
      return cfg;
    }
  }
  throw DataError("unknown model preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& row : kPresets) names.push_back(row.name);
  return names;
}

namespace {

void apply_key(ModelConfig& cfg, const std::string& key, const std::string& value,
               const std::string& origin) {
  if (key == "preset") {
    // handled by the caller before other keys
  } else if (key == "encoding") {
    const std::string v = lower(value);
    if (v == "discrete") cfg.encoding = EncodingKind::Discrete;
    else if (v == "continuous") cfg.encoding = EncodingKind::Continuous;
    else throw DataError(origin + ": encoding must be discrete or continuous");
  } else if (key == "architecture") {
    const std::string v = lower(value);
    if (v == "ff") cfg.architecture = Architecture::FF;
    else if (v == "cnn") cfg.architecture = Architecture::CNN;
    else if (v == "rnn") cfg.architecture = Architecture::RNN;
    else throw DataError(origin + ": architecture must be ff, cnn or rnn");
  } else if (key == "blocks") {
    cfg.blocks = to_int(value, key);
  } else if (key == "block_size") {
    cfg.block_size = to_int(value, key);
  } else if (key == "latent_size") {
    cfg.latent_size = to_int(value, key);
  } else if (key == "learning_rate") {
    cfg.learning_rate = to_double(value, key);
  } else if (key == "batch_size") {
    cfg.batch_size = to_int(value, key);
  } else if (key == "beta") {
    cfg.beta = to_double(value, key);
  } else if (key == "alpha") {
    cfg.alpha = to_double(value, key);
  } else if (key == "dropout") {
    cfg.dropout = to_double(value, key);
  } else if (key == "teacher_forcing") {
    cfg.teacher_forcing = to_double(value, key);
  } else if (key == "step_min") {
    cfg.step_min = to_int(value, key);
  } else if (key == "bn_momentum") {
    cfg.bn_momentum = to_double(value, key);
  } else if (key == "leaky_slope") {
    cfg.leaky_slope = to_double(value, key);
  } else if (key == "grad_clip") {
    cfg.grad_clip = to_double(value, key);
  } else if (key == "max_epochs") {
    cfg.max_epochs = to_int(value, key);
  } else if (key == "patience") {
    cfg.patience = to_int(value, key);
  } else if (key == "min_delta") {
    cfg.min_delta = to_double(value, key);
  } else {
    throw DataError(origin + ": unknown model config key '" + key + "'");
  }
}

}  // namespace

ModelConfig parse_model_config(std::istream& in, const std::string& origin) {
  const auto sections = core::parse_ini(in, origin);
  ModelConfig cfg;
  bool seeded = false;
  for (const auto& section : sections) {
    if (section.name != "" && section.name != "model" && section.name != "train") continue;
    if (section.has("preset")) {
      cfg = preset(section.get("preset"));
      seeded = true;
    }
  }
  bool any = seeded;
  for (const auto& section : sections) {
    if (section.name != "" && section.name != "model" && section.name != "train") continue;
    for (const auto& [k, v] : section.values) {
      apply_key(cfg, k, v, origin);
      any = true;
    }
  }
  if (!any) throw DataError(origin + ": empty model config");
  cfg.check();
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  return parse_model_config(in, path);
}

void write_model_config(const ModelConfig& cfg, std::ostream& out) {
  out << "encoding=" << to_string(cfg.encoding) << '\n'
      << "architecture=" << to_string(cfg.architecture) << '\n'
      << "blocks=" << cfg.blocks << '\n'
      << "block_size=" << cfg.block_size << '\n'
      << "latent_size=" << cfg.latent_size << '\n';
  const auto num = [&out](const char* key, double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    out << key << '=' << ss.str() << '\n';
  };
  num("learning_rate", cfg.learning_rate);
  out << "batch_size=" << cfg.batch_size << '\n';
  num("beta", cfg.beta);
  num("alpha", cfg.alpha);
  num("dropout", cfg.dropout);
  num("teacher_forcing", cfg.teacher_forcing);
  out << "step_min=" << cfg.step_min << '\n';
  num("bn_momentum", cfg.bn_momentum);
  num("leaky_slope", cfg.leaky_slope);
  num("grad_clip", cfg.grad_clip);
  out << "max_epochs=" << cfg.max_epochs << '\n'
      << "patience=" << cfg.patience << '\n';
  num("min_delta", cfg.min_delta);
}

}  // namespace schedsyn::vae
