#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/schedule.hpp"
#include "encoding/encoding.hpp"
#include "tensor/adam.hpp"
#include "tensor/tape.hpp"
#include "vae/config.hpp"

namespace schedsyn::vae {

// Encoded minibatch. Discrete schedules are token grids; continuous ones
// carry symbols plus day-fraction durations.
struct Batch {
  tensor::IntArray tokens;   // (B, L)
  tensor::Tensor durations;  // (B, L), continuous encoding only
  int size = 0;
};

Batch make_batch(std::span<const core::Schedule> schedules, const ModelConfig& cfg);

// Stochastic context of one forward pass. Dropout masks and teacher-forcing
// coins are pure functions of (seed, step, position), never of thread layout.
struct StepCtx {
  uint64_t seed = 0;
  uint64_t step = 0;
  bool train = false;
};

struct LossNodes {
  tensor::NodeId total = tensor::kNoNode;
  tensor::NodeId ce = tensor::kNoNode;
  tensor::NodeId mse = tensor::kNoNode;  // continuous only
  tensor::NodeId kl = tensor::kNoNode;
};

struct ForwardNodes {
  tensor::NodeId probs = tensor::kNoNode;      // (B, L, classes)
  tensor::NodeId durations = tensor::kNoNode;  // (B, L), continuous only
  tensor::NodeId mu = tensor::kNoNode;
  tensor::NodeId logvar = tensor::kNoNode;
  LossNodes loss;
  // Exactly one tape node per touched parameter; the trainer harvests
  // gradients through this mapping.
  std::vector<std::pair<int, tensor::NodeId>> param_nodes;
};

// Closed-form KL against the standard normal prior: mean over the batch of
// 0.5 * sum_d (mu^2 + exp(logvar) - 1 - logvar).
double kl_divergence(const tensor::Tensor& mu, const tensor::Tensor& logvar);
tensor::NodeId kl_node(tensor::Tape& tape, tensor::NodeId mu, tensor::NodeId logvar, int batch);

// Reconstruction + beta * KL; probs hold per-step class probabilities.
LossNodes loss_discrete(tensor::Tape& tape, tensor::NodeId probs,
                        const tensor::IntArray& targets, tensor::NodeId mu,
                        tensor::NodeId logvar, double beta, int batch);
LossNodes loss_continuous(tensor::Tape& tape, tensor::NodeId probs, tensor::NodeId durations,
                          const tensor::IntArray& target_tokens,
                          const tensor::Tensor& target_durations, tensor::NodeId mu,
                          tensor::NodeId logvar, double alpha, double beta, int batch);

struct ParamNodes;  // tape-local parameter node cache

class VaeModel {
 public:
  // Fresh parameters drawn from the init stream of `seed`.
  VaeModel(ModelConfig cfg, uint64_t seed);
  // Adopt existing parameters (checkpoint load).
  VaeModel(ModelConfig cfg, tensor::ParamStore params);

  const ModelConfig& config() const { return config_; }
  tensor::ParamStore& params() { return params_; }
  const tensor::ParamStore& params() const { return params_; }

  // Full training/validation graph: embed, encode, latent block with the
  // given noise (B x latent), decode, losses. With ctx.train false the RNN
  // decoder is fully teacher-forced, batchnorm uses running stats and
  // dropout is a no-op.
  ForwardNodes forward(tensor::Tape& tape, const Batch& batch, const tensor::Tensor& eps,
                       const StepCtx& ctx);

  // Deterministic decode of latent draws (eval mode, free-running decoder).
  // Appends decoded schedules to `out`; degenerate continuous decodes only
  // bump the counter.
  void decode_latent(const tensor::Tensor& z, std::vector<core::Schedule>& out,
                     uint64_t& degenerate);

  void save(const std::string& path) const;
  static VaeModel load(const std::string& path);

 private:
  struct DecoderOut {
    tensor::NodeId probs = tensor::kNoNode;
    tensor::NodeId durations = tensor::kNoNode;
  };

  tensor::NodeId embed_tokens(tensor::Tape& tape, ParamNodes& p,
                              const tensor::IntArray& tokens,
                              const tensor::Tensor* durations) const;
  tensor::NodeId encoder_forward(tensor::Tape& tape, ParamNodes& p, tensor::NodeId embedded,
                                 const StepCtx& ctx, int* layer_tag) const;
  DecoderOut decoder_forward(tensor::Tape& tape, ParamNodes& p, tensor::NodeId decoder_in,
                             int batch, const StepCtx& ctx, int* layer_tag,
                             const Batch* teacher) const;
  DecoderOut unembed(tensor::Tape& tape, ParamNodes& p, tensor::NodeId features) const;

  void build_params(uint64_t seed);
  std::vector<int> encoder_lengths() const;  // CNN length schedule
  int encoder_feature_size() const;
  int decoder_entry_size() const;

  ModelConfig config_;
  tensor::ParamStore params_;
};

}  // namespace schedsyn::vae
