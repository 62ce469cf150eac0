#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace schedsyn::vae {

enum class EncodingKind { Discrete, Continuous };
enum class Architecture { FF, CNN, RNN };

std::string to_string(EncodingKind k);
std::string to_string(Architecture a);

struct ModelConfig {
  EncodingKind encoding = EncodingKind::Continuous;
  Architecture architecture = Architecture::RNN;
  int blocks = 4;        // N
  int block_size = 256;  // S
  int latent_size = 6;
  double learning_rate = 1e-3;
  int batch_size = 1024;
  double beta = 0.01;
  double alpha = 200.0;          // duration loss weight, continuous only
  double dropout = 0.1;
  double teacher_forcing = 0.5;  // RNN decoder only
  int step_min = 10;             // discrete time bin

  // engine details the literature leaves open; exposed so runs are auditable
  double bn_momentum = 0.1;
  double leaky_slope = 0.01;
  double grad_clip = 5.0;  // global-norm clip, RNN variants only

  // training control
  int max_epochs = 200;
  int patience = 10;
  double min_delta = 1e-4;

  int sequence_length() const;  // tokens per schedule under this encoding
  int class_count() const;      // softmax classes: 8 discrete, 10 continuous
  bool is_rnn() const { return architecture == Architecture::RNN; }
  void check() const;  // raises DataError on inconsistent settings
};

// Named presets: DiscFF, DiscCNN, DiscRNN, ContFF, ContCNN, ContRNN, plus the
// down-sampled ContRNN-Mid / -Small / -Tiny variants.
ModelConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// Sectioned key=value config; `preset=` in [model] seeds the defaults.
ModelConfig load_model_config(const std::string& path);
ModelConfig parse_model_config(std::istream& in, const std::string& origin);

void write_model_config(const ModelConfig& cfg, std::ostream& out);

}  // namespace schedsyn::vae
