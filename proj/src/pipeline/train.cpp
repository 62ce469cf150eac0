#include "pipeline/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace schedsyn::pipeline {

using tensor::Tensor;
using vae::Batch;
using vae::VaeModel;

namespace {

constexpr int kChunk = 256;  // fixed so gradient reduction order is thread-count invariant

Batch slice_batch(const Batch& full, const std::vector<size_t>& order, size_t from, size_t to) {
  Batch out;
  out.size = static_cast<int>(to - from);
  const int len = full.tokens.shape[1];
  out.tokens.shape = {out.size, len};
  out.tokens.data.reserve(static_cast<size_t>(out.size) * len);
  const bool has_durs = full.durations.numel() > 0;
  if (has_durs) out.durations = Tensor({out.size, len});
  for (size_t i = from; i < to; ++i) {
    const size_t row = order[i];
    const auto* tok = full.tokens.data.data() + row * static_cast<size_t>(len);
    out.tokens.data.insert(out.tokens.data.end(), tok, tok + len);
    if (has_durs) {
      std::copy_n(full.durations.ptr() + row * static_cast<size_t>(len), len,
                  out.durations.ptr() + (i - from) * static_cast<size_t>(len));
    }
  }
  return out;
}

struct ChunkResult {
  EpochLoss loss;  // chunk means
  int size = 0;
  std::vector<Tensor> grads;  // parallel to the param store; empty in eval
};

// Forward (and optionally backward) one chunk on its own tape.
ChunkResult run_chunk(VaeModel& model, const Batch& chunk, int64_t sample_offset,
                      const Tensor& eps, const vae::StepCtx& ctx, bool compute_grads) {
  tensor::Tape tape(sample_offset);
  if (!compute_grads) tape.set_grad_enabled(false);
  const auto nodes = model.forward(tape, chunk, eps, ctx);

  ChunkResult result;
  result.size = chunk.size;
  result.loss.total = tape.val64(nodes.loss.total);
  result.loss.ce = tape.val64(nodes.loss.ce);
  result.loss.kl = tape.val64(nodes.loss.kl);
  if (nodes.loss.mse != tensor::kNoNode) result.loss.mse = tape.val64(nodes.loss.mse);

  if (compute_grads) {
    tape.backward(nodes.loss.total);
    result.grads.resize(model.params().size());
    for (const auto& [idx, node] : nodes.param_nodes) {
      if (!model.params().at(idx).trainable) continue;
      result.grads[static_cast<size_t>(idx)] = tape.grad(node);
    }
  }
  return result;
}

void accumulate_epoch(EpochLoss& into, const EpochLoss& part, double weight) {
  into.total += part.total * weight;
  into.ce += part.ce * weight;
  into.mse += part.mse * weight;
  into.kl += part.kl * weight;
}

}  // namespace

VaeModel train(const vae::ModelConfig& cfg, const core::ScheduleSample& train_sample,
               const core::ScheduleSample& val_sample, uint64_t seed, TrainReport* report,
               int threads, const EpochHook& hook) {
  cfg.check();
  if (train_sample.schedules.empty() || val_sample.schedules.empty()) {
    throw DataError("train: empty training or validation sample");
  }

  const auto start = std::chrono::steady_clock::now();
  VaeModel model(cfg, seed);

  const Batch full_train = vae::make_batch(train_sample.schedules, cfg);
  const Batch full_val = vae::make_batch(val_sample.schedules, cfg);

  // Batchnorm statistics are full-batch quantities; chunking would change
  // them, so FF/CNN variants stay on one tape.
  const bool chunkable = cfg.is_rnn();
  const int worker_count = chunkable ? std::max(1, threads) : 1;

  tensor::AdamState adam;
  adam.lr = cfg.learning_rate;

  TrainReport local;
  tensor::ParamStore best_params = model.params();
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  const size_t n_train = train_sample.schedules.size();
  const size_t n_val = val_sample.schedules.size();
  std::vector<size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::vector<size_t> val_order(n_val);
  std::iota(val_order.begin(), val_order.end(), 0);

  uint64_t global_step = 0;
  const int latent = cfg.latent_size;

  const auto run_batch = [&](const Batch& full, const std::vector<size_t>& idx, size_t from,
                             size_t to, const vae::StepCtx& ctx, bool grads,
                             rng::Stream eps_stream, uint64_t eps_a) -> EpochLoss {
    const size_t batch_n = to - from;
    // chunk boundaries are fixed by kChunk, never by the thread count
    std::vector<std::pair<size_t, size_t>> chunks;
    if (!chunkable) {
      chunks.push_back({from, to});
    } else {
      for (size_t c = from; c < to; c += kChunk) chunks.push_back({c, std::min(c + kChunk, to)});
    }

    std::vector<ChunkResult> results(chunks.size());
    const auto work = [&](size_t worker) {
      for (size_t c = worker; c < chunks.size(); c += static_cast<size_t>(worker_count)) {
        const auto [lo, hi] = chunks[c];
        const Batch chunk = slice_batch(full, idx, lo, hi);
        Tensor eps({chunk.size, latent});
        for (int b = 0; b < chunk.size; ++b) {
          for (int d = 0; d < latent; ++d) {
            // keyed by the in-batch position so chunking cannot matter
            eps.data[static_cast<size_t>(b) * latent + d] = static_cast<float>(rng::normal(
                rng::key(ctx.seed, eps_stream, eps_a, static_cast<uint64_t>(lo - from + b),
                         static_cast<uint64_t>(d))));
          }
        }
        results[c] = run_chunk(model, chunk, static_cast<int64_t>(lo - from), eps, ctx, grads);
      }
    };
    if (worker_count == 1 || chunks.size() == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < worker_count; ++w) pool.emplace_back(work, static_cast<size_t>(w));
      for (auto& t : pool) t.join();
    }

    EpochLoss batch_loss;
    if (grads) model.params().zero_grads();
    for (const auto& r : results) {
      const double weight = static_cast<double>(r.size) / static_cast<double>(batch_n);
      accumulate_epoch(batch_loss, r.loss, weight);
      if (grads) {
        const float w = static_cast<float>(weight);
        for (size_t i = 0; i < r.grads.size(); ++i) {
          if (r.grads[i].data.empty()) continue;
          auto& dst = model.params().at(static_cast<int>(i)).grad;
          for (int64_t j = 0; j < dst.numel(); ++j) dst.data[j] += w * r.grads[i].data[j];
        }
      }
    }
    if (!std::isfinite(batch_loss.total)) {
      throw NumericError("train: loss became non-finite at step " +
                         std::to_string(global_step));
    }
    return batch_loss;
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng::Sequence shuffle_rng(rng::key(seed, rng::Stream::Shuffle, static_cast<uint64_t>(epoch)));
    rng::shuffle(order, shuffle_rng);

    EpochLoss train_loss;
    size_t seen = 0;
    for (size_t from = 0; from < n_train; from += static_cast<size_t>(cfg.batch_size)) {
      const size_t to = std::min(from + static_cast<size_t>(cfg.batch_size), n_train);
      vae::StepCtx ctx{seed, global_step, true};
      const EpochLoss batch_loss =
          run_batch(full_train, order, from, to, ctx, true, rng::Stream::Latent, global_step);
      if (cfg.is_rnn() && cfg.grad_clip > 0.0) model.params().clip_grad_norm(cfg.grad_clip);
      tensor::adam_step(adam, model.params());
      accumulate_epoch(train_loss, batch_loss,
                       static_cast<double>(to - from) / static_cast<double>(n_train));
      seen += to - from;
      ++global_step;
    }
    (void)seen;

    EpochLoss val_loss;
    size_t val_batch_index = 0;
    for (size_t from = 0; from < n_val; from += static_cast<size_t>(cfg.batch_size)) {
      const size_t to = std::min(from + static_cast<size_t>(cfg.batch_size), n_val);
      vae::StepCtx ctx{seed, static_cast<uint64_t>(val_batch_index), false};
      // epoch-independent noise keeps the plateau signal comparable
      const EpochLoss batch_loss = run_batch(full_val, val_order, from, to, ctx, false,
                                             rng::Stream::ValLatent, val_batch_index);
      accumulate_epoch(val_loss, batch_loss,
                       static_cast<double>(to - from) / static_cast<double>(n_val));
      ++val_batch_index;
    }
    if (!std::isfinite(val_loss.total)) {
      throw NumericError("train: validation loss became non-finite");
    }

    local.train_losses.push_back(train_loss);
    local.val_losses.push_back(val_loss);
    if (hook) hook(epoch, train_loss, val_loss);

    if (val_loss.total < best_val - cfg.min_delta) {
      best_val = val_loss.total;
      best_epoch = epoch;
      best_params = model.params();
    }
    if (epoch - best_epoch >= cfg.patience) break;
  }

  local.best_epoch = best_epoch;
  local.best_val = best_val;
  local.steps = static_cast<int64_t>(global_step);
  local.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (report) *report = local;

  return VaeModel(cfg, std::move(best_params));
}

}  // namespace schedsyn::pipeline
