#include "vae/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "tensor/checkpoint.hpp"

namespace schedsyn::vae {

using core::Schedule;
using encoding::Vocab;
using tensor::IntArray;
using tensor::kNoNode;
using tensor::NodeId;
using tensor::Tape;
using tensor::Tensor;

// One tape-level view of the parameter store: exactly one node per parameter
// so gradients for shared weights (RNN steps, shared heads) accumulate in one
// place.
struct ParamNodes {
  Tape& tape;
  tensor::ParamStore& store;
  std::map<int, NodeId> cache;

  NodeId operator()(const std::string& name) {
    const int idx = store.index_of(name);
    const auto it = cache.find(idx);
    if (it != cache.end()) return it->second;
    const NodeId id = tape.param(&store.at(idx).value);
    cache.emplace(idx, id);
    return id;
  }
};

namespace {

constexpr float kBnEps = 1e-5f;

std::string block_name(const char* side, int i, const char* leaf) {
  return std::string(side) + ".b" + std::to_string(i) + "." + leaf;
}

std::string lstm_name(const char* side, int i, const char* leaf) {
  return std::string(side) + ".l" + std::to_string(i) + "." + leaf;
}

}  // namespace

Batch make_batch(std::span<const Schedule> schedules, const ModelConfig& cfg) {
  Batch batch;
  batch.size = static_cast<int>(schedules.size());
  const int len = cfg.sequence_length();
  batch.tokens.shape = {batch.size, len};
  batch.tokens.data.reserve(static_cast<size_t>(batch.size) * len);
  if (cfg.encoding == EncodingKind::Discrete) {
    for (const auto& s : schedules) {
      const auto enc = encoding::encode_discrete(s, cfg.step_min);
      for (const auto tok : enc.tokens) batch.tokens.data.push_back(tok);
    }
  } else {
    batch.durations = Tensor({batch.size, len});
    int64_t at = 0;
    for (const auto& s : schedules) {
      const auto enc = encoding::encode_continuous(s);
      for (const auto& tok : enc.tokens) {
        batch.tokens.data.push_back(tok.symbol);
        batch.durations.data[at++] = static_cast<float>(tok.duration);
      }
    }
  }
  return batch;
}

double kl_divergence(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape != logvar.shape) {
    throw DataError("kl_divergence: shapes " + mu.shape_str() + " vs " + logvar.shape_str());
  }
  const int64_t batch = mu.rank() >= 2 ? mu.shape[0] : 1;
  double acc = 0.0;
  for (int64_t i = 0; i < mu.numel(); ++i) {
    const double m = mu.data[i];
    const double lv = logvar.data[i];
    acc += m * m + std::exp(lv) - 1.0 - lv;
  }
  return 0.5 * acc / static_cast<double>(batch);
}

NodeId kl_node(Tape& tape, NodeId mu, NodeId logvar, int batch) {
  const auto sq = tape.mul(mu, mu);
  const auto terms = tape.sub(tape.add(sq, tape.exp(logvar)), tape.affine(logvar, 1.0f, 1.0f));
  return tape.affine(tape.sum(terms), static_cast<float>(0.5 / batch), 0.0f);
}

LossNodes loss_discrete(Tape& tape, NodeId probs, const IntArray& targets, NodeId mu,
                        NodeId logvar, double beta, int batch) {
  LossNodes out;
  out.ce = tape.cross_entropy_probs(probs, targets);
  out.kl = kl_node(tape, mu, logvar, batch);
  out.total = tape.add(out.ce, tape.affine(out.kl, static_cast<float>(beta), 0.0f));
  return out;
}

LossNodes loss_continuous(Tape& tape, NodeId probs, NodeId durations,
                          const IntArray& target_tokens, const Tensor& target_durations,
                          NodeId mu, NodeId logvar, double alpha, double beta, int batch) {
  LossNodes out;
  out.ce = tape.cross_entropy_probs(probs, target_tokens);
  const auto diff = tape.sub(durations, tape.value(target_durations));
  out.mse = tape.mean(tape.mul(diff, diff));
  out.kl = kl_node(tape, mu, logvar, batch);
  out.total =
      tape.add(tape.add(out.ce, tape.affine(out.mse, static_cast<float>(alpha), 0.0f)),
               tape.affine(out.kl, static_cast<float>(beta), 0.0f));
  return out;
}

VaeModel::VaeModel(ModelConfig cfg, uint64_t seed) : config_(std::move(cfg)) {
  config_.check();
  build_params(seed);
}

VaeModel::VaeModel(ModelConfig cfg, tensor::ParamStore params)
    : config_(std::move(cfg)), params_(std::move(params)) {
  config_.check();
}

int VaeModel::encoder_feature_size() const {
  if (config_.architecture == Architecture::CNN) {
    return encoder_lengths().back() * config_.block_size;
  }
  return config_.block_size;
}

int VaeModel::decoder_entry_size() const { return encoder_feature_size(); }

std::vector<int> VaeModel::encoder_lengths() const {
  std::vector<int> lengths{config_.sequence_length()};
  for (int i = 0; i < config_.blocks; ++i) {
    lengths.push_back(tensor::conv1d_out_len(lengths.back(), 4, 2, 1));
  }
  return lengths;
}

void VaeModel::build_params(uint64_t seed) {
  const int s = config_.block_size;
  const int len = config_.sequence_length();
  const bool discrete = config_.encoding == EncodingKind::Discrete;
  const int embed_width = discrete ? s : s - 1;
  uint64_t tag = 0;

  const auto he = [&](std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    tensor::init_he_uniform(t, fan_in, seed, tag++);
    return t;
  };
  const auto flat = [&](std::vector<int> shape, double bound) {
    Tensor t(std::move(shape));
    tensor::init_uniform(t, bound, seed, tag++);
    return t;
  };

  params_.add("embed.table", flat({Vocab::kSize, embed_width},
                                  1.0 / std::sqrt(static_cast<double>(embed_width))));

  const auto add_norm = [&](const char* side, int i) {
    params_.add(block_name(side, i, "gamma"), Tensor::full({s}, 1.0f));
    params_.add(block_name(side, i, "beta"), Tensor::zeros({s}));
    params_.add(block_name(side, i, "rm"), Tensor::zeros({s}), false);
    params_.add(block_name(side, i, "rv"), Tensor::full({s}, 1.0f), false);
  };
  const auto add_ff_block = [&](const char* side, int i, int in_size) {
    params_.add(block_name(side, i, "w"), he({in_size, s}, in_size));
    params_.add(block_name(side, i, "b"), Tensor::zeros({s}));
    add_norm(side, i);
  };
  const auto add_conv_block = [&](const char* side, int i) {
    params_.add(block_name(side, i, "w"), he({4, s, s}, 4 * s));
    params_.add(block_name(side, i, "b"), Tensor::zeros({s}));
    add_norm(side, i);
  };
  const auto add_lstm_layer = [&](const char* side, int i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s));
    params_.add(lstm_name(side, i, "w"), flat({s + s, 4 * s}, bound));
    params_.add(lstm_name(side, i, "b"), Tensor::zeros({4 * s}));
  };

  switch (config_.architecture) {
    case Architecture::FF:
      for (int i = 0; i < config_.blocks; ++i) {
        add_ff_block("enc", i, i == 0 ? len * s : s);
        add_ff_block("dec", i, s);
      }
      params_.add("dec.out.w", he({s, len * s}, s));
      params_.add("dec.out.b", Tensor::zeros({len * s}));
      break;
    case Architecture::CNN:
      for (int i = 0; i < config_.blocks; ++i) {
        add_conv_block("enc", i);
        add_conv_block("dec", i);
      }
      break;
    case Architecture::RNN:
      for (int i = 0; i < config_.blocks; ++i) {
        add_lstm_layer("enc", i);
        add_lstm_layer("dec", i);
      }
      break;
  }

  const int feat = encoder_feature_size();
  params_.add("latent.mu.w", he({feat, config_.latent_size}, feat));
  params_.add("latent.mu.b", Tensor::zeros({config_.latent_size}));
  params_.add("latent.logvar.w", he({feat, config_.latent_size}, feat));
  params_.add("latent.logvar.b", Tensor::zeros({config_.latent_size}));
  params_.add("latent.expand.w",
              he({config_.latent_size, decoder_entry_size()}, config_.latent_size));
  params_.add("latent.expand.b", Tensor::zeros({decoder_entry_size()}));

  const int head_in = discrete ? s : s - 1;
  params_.add("head.act.w", he({head_in, config_.class_count()}, head_in));
  params_.add("head.act.b", Tensor::zeros({config_.class_count()}));
}

NodeId VaeModel::embed_tokens(Tape& tape, ParamNodes& p, const IntArray& tokens,
                              const Tensor* durations) const {
  const auto emb = tape.embedding(tokens, p("embed.table"));
  if (config_.encoding == EncodingKind::Discrete) return emb;
  if (durations == nullptr) throw std::logic_error("continuous embedding needs durations");
  std::vector<int> dur_shape = durations->shape;
  dur_shape.push_back(1);
  const auto dur = tape.reshape(tape.value(*durations), std::move(dur_shape));
  return tape.concat_last(emb, dur);
}

namespace {

struct BlockCtx {
  ParamNodes& p;
  const ModelConfig& cfg;
  const StepCtx& step;
  int* layer_tag;

  uint64_t next_key() {
    return rng::key(step.seed, rng::Stream::Dropout, step.step,
                    static_cast<uint64_t>((*layer_tag)++));
  }
};

NodeId ff_block(Tape& tape, NodeId x, const char* side, int i, BlockCtx& ctx) {
  auto& store = ctx.p.store;
  auto h = tape.linear(x, ctx.p(block_name(side, i, "w")), ctx.p(block_name(side, i, "b")));
  h = tape.batchnorm(h, ctx.p(block_name(side, i, "gamma")), ctx.p(block_name(side, i, "beta")),
                     store.named(block_name(side, i, "rm")).value,
                     store.named(block_name(side, i, "rv")).value, ctx.step.train,
                     static_cast<float>(ctx.cfg.bn_momentum), kBnEps);
  h = tape.leaky_relu(h, static_cast<float>(ctx.cfg.leaky_slope));
  return tape.dropout(h, static_cast<float>(ctx.cfg.dropout), ctx.next_key(), ctx.step.train);
}

NodeId conv_block(Tape& tape, NodeId x, const char* side, int i, BlockCtx& ctx, bool transposed,
                  int pad, int out_pad) {
  auto& store = ctx.p.store;
  const auto w = ctx.p(block_name(side, i, "w"));
  const auto b = ctx.p(block_name(side, i, "b"));
  auto h = transposed ? tape.deconv1d(x, w, b, 2, pad, out_pad) : tape.conv1d(x, w, b, 2, pad);
  h = tape.batchnorm(h, ctx.p(block_name(side, i, "gamma")), ctx.p(block_name(side, i, "beta")),
                     store.named(block_name(side, i, "rm")).value,
                     store.named(block_name(side, i, "rv")).value, ctx.step.train,
                     static_cast<float>(ctx.cfg.bn_momentum), kBnEps);
  h = tape.leaky_relu(h, static_cast<float>(ctx.cfg.leaky_slope));
  return tape.dropout(h, static_cast<float>(ctx.cfg.dropout), ctx.next_key(), ctx.step.train);
}

struct LstmState {
  NodeId h;
  NodeId c;
};

// One stacked-LSTM step; dropout sits between layers.
NodeId lstm_stack_step(Tape& tape, NodeId x, std::vector<LstmState>& states, const char* side,
                       BlockCtx& ctx) {
  const int hidden = ctx.cfg.block_size;
  NodeId inp = x;
  for (int l = 0; l < ctx.cfg.blocks; ++l) {
    if (l > 0) {
      inp = tape.dropout(inp, static_cast<float>(ctx.cfg.dropout), ctx.next_key(),
                         ctx.step.train);
    }
    auto& state = states[static_cast<size_t>(l)];
    const auto hc = tape.lstm_cell(inp, state.h, state.c, ctx.p(lstm_name(side, l, "w")),
                                   ctx.p(lstm_name(side, l, "b")));
    state.h = tape.slice_last(hc, 0, hidden);
    state.c = tape.slice_last(hc, hidden, 2 * hidden);
    inp = state.h;
  }
  return inp;
}

IntArray token_column(const IntArray& tokens, int t) {
  const int len = tokens.shape[1];
  const int batch = tokens.shape[0];
  IntArray col;
  col.shape = {batch};
  col.data.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    col.data.push_back(tokens.data[static_cast<size_t>(b) * len + t]);
  }
  return col;
}

Tensor dur_column(const Tensor& durations, int t) {
  const int len = durations.shape[1];
  const int batch = durations.shape[0];
  Tensor col({batch, 1});
  for (int b = 0; b < batch; ++b) {
    col.data[static_cast<size_t>(b)] = durations.data[static_cast<size_t>(b) * len + t];
  }
  return col;
}

}  // namespace

NodeId VaeModel::encoder_forward(Tape& tape, ParamNodes& p, NodeId embedded, const StepCtx& ctx,
                                 int* layer_tag) const {
  BlockCtx bctx{p, config_, ctx, layer_tag};
  const int batch = tape.val(embedded).shape[0];
  const int len = config_.sequence_length();
  const int s = config_.block_size;

  switch (config_.architecture) {
    case Architecture::FF: {
      auto h = tape.reshape(embedded, {batch, len * s});
      for (int i = 0; i < config_.blocks; ++i) h = ff_block(tape, h, "enc", i, bctx);
      return h;
    }
    case Architecture::CNN: {
      auto h = embedded;
      for (int i = 0; i < config_.blocks; ++i) {
        h = conv_block(tape, h, "enc", i, bctx, false, 1, 0);
      }
      const auto& shape = tape.val(h).shape;
      return tape.reshape(h, {batch, shape[1] * shape[2]});
    }
    case Architecture::RNN:
    default: {
      std::vector<LstmState> states;
      const auto zeros = tape.value(Tensor::zeros({batch, s}));
      for (int l = 0; l < config_.blocks; ++l) states.push_back({zeros, zeros});
      NodeId top = zeros;
      for (int t = 0; t < len; ++t) {
        top = lstm_stack_step(tape, tape.slice_step(embedded, t), states, "enc", bctx);
      }
      return top;
    }
  }
}

VaeModel::DecoderOut VaeModel::unembed(Tape& tape, ParamNodes& p, NodeId features) const {
  DecoderOut out;
  if (config_.encoding == EncodingKind::Discrete) {
    out.probs = tape.softmax_last(tape.linear(features, p("head.act.w"), p("head.act.b")));
    return out;
  }
  const int s = config_.block_size;
  const auto acts = tape.slice_last(features, 0, s - 1);
  const auto dur_raw = tape.slice_last(features, s - 1, s);
  out.probs = tape.softmax_last(tape.linear(acts, p("head.act.w"), p("head.act.b")));
  out.durations = tape.sigmoid(dur_raw);
  return out;
}

VaeModel::DecoderOut VaeModel::decoder_forward(Tape& tape, ParamNodes& p, NodeId decoder_in,
                                               int batch, const StepCtx& ctx, int* layer_tag,
                                               const Batch* teacher) const {
  BlockCtx bctx{p, config_, ctx, layer_tag};
  const int len = config_.sequence_length();
  const int s = config_.block_size;
  const bool continuous = config_.encoding == EncodingKind::Continuous;

  if (config_.architecture == Architecture::FF) {
    auto h = decoder_in;
    for (int i = 0; i < config_.blocks; ++i) h = ff_block(tape, h, "dec", i, bctx);
    h = tape.linear(h, p("dec.out.w"), p("dec.out.b"));
    DecoderOut out = unembed(tape, p, tape.reshape(h, {batch, len, s}));
    if (continuous) out.durations = tape.reshape(out.durations, {batch, len});
    return out;
  }

  if (config_.architecture == Architecture::CNN) {
    const auto lengths = encoder_lengths();
    auto h = tape.reshape(decoder_in, {batch, lengths.back(), s});
    for (int i = 0; i < config_.blocks; ++i) {
      const int in_len = lengths[static_cast<size_t>(config_.blocks - i)];
      const int target = lengths[static_cast<size_t>(config_.blocks - i - 1)];
      const auto geom = tensor::deconv1d_geometry(in_len, target, 4, 2);
      h = conv_block(tape, h, "dec", i, bctx, true, geom.pad, geom.out_pad);
    }
    DecoderOut out = unembed(tape, p, h);
    if (continuous) out.durations = tape.reshape(out.durations, {batch, len});
    return out;
  }

  // RNN: autoregressive unroll from the start token; the latent expansion
  // seeds the first layer's hidden state.
  std::vector<LstmState> states;
  const auto zeros = tape.value(Tensor::zeros({batch, s}));
  for (int l = 0; l < config_.blocks; ++l) {
    states.push_back({l == 0 ? decoder_in : zeros, zeros});
  }

  // the continuous slot 0 is the start token by construction
  const int steps = continuous ? len - 1 : len;
  IntArray cur_tokens;
  cur_tokens.shape = {batch};
  cur_tokens.data.assign(static_cast<size_t>(batch), Vocab::kSos);
  Tensor cur_durs({batch, 1});

  std::vector<NodeId> prob_steps;
  std::vector<NodeId> dur_steps;
  if (continuous) {
    Tensor sos_probs({batch, config_.class_count()});
    for (int b = 0; b < batch; ++b) {
      sos_probs.data[static_cast<size_t>(b) * config_.class_count() + Vocab::kSos] = 1.0f;
    }
    prob_steps.push_back(tape.value(std::move(sos_probs)));
    dur_steps.push_back(tape.value(Tensor::zeros({batch, 1})));
  }

  for (int t = 0; t < steps; ++t) {
    NodeId x_t = tape.embedding(cur_tokens, p("embed.table"));
    if (continuous) x_t = tape.concat_last(x_t, tape.value(cur_durs));

    const auto top = lstm_stack_step(tape, x_t, states, "dec", bctx);
    const auto step_out = unembed(tape, p, top);
    prob_steps.push_back(step_out.probs);
    if (continuous) dur_steps.push_back(step_out.durations);

    if (t + 1 >= steps) break;
    // Next input: during training a per-step coin picks between the target
    // and the model's own argmax; validation is fully forced; generation
    // always free-runs.
    const int target_col = continuous ? t + 1 : t;
    bool force = false;
    if (teacher != nullptr) {
      force = !ctx.train ||
              rng::uniform(rng::key(ctx.seed, rng::Stream::TeacherForce, ctx.step,
                                    static_cast<uint64_t>(t))) < config_.teacher_forcing;
    }
    if (force) {
      cur_tokens = token_column(teacher->tokens, target_col);
      if (continuous) cur_durs = dur_column(teacher->durations, target_col);
    } else {
      const auto ids = tensor::argmax_last(tape.val(step_out.probs));
      for (int b = 0; b < batch; ++b) {
        cur_tokens.data[static_cast<size_t>(b)] = ids[static_cast<size_t>(b)];
      }
      if (continuous) {
        const auto& dv = tape.val(step_out.durations);
        for (int b = 0; b < batch; ++b) {
          cur_durs.data[static_cast<size_t>(b)] = dv.data[b];
        }
      }
    }
  }

  DecoderOut out;
  out.probs = tape.stack_steps(prob_steps);
  if (continuous) out.durations = tape.reshape(tape.stack_steps(dur_steps), {batch, len});
  return out;
}

ForwardNodes VaeModel::forward(Tape& tape, const Batch& batch, const Tensor& eps,
                               const StepCtx& ctx) {
  ParamNodes p{tape, params_, {}};
  int layer_tag = 0;

  const auto embedded =
      embed_tokens(tape, p, batch.tokens,
                   config_.encoding == EncodingKind::Continuous ? &batch.durations : nullptr);
  const auto feat = encoder_forward(tape, p, embedded, ctx, &layer_tag);

  ForwardNodes out;
  out.mu = tape.linear(feat, p("latent.mu.w"), p("latent.mu.b"));
  out.logvar = tape.linear(feat, p("latent.logvar.w"), p("latent.logvar.b"));
  const auto sigma = tape.exp(tape.affine(out.logvar, 0.5f, 0.0f));
  const auto z = tape.add(out.mu, tape.mul(sigma, tape.value(eps)));
  const auto dec_in = tape.linear(z, p("latent.expand.w"), p("latent.expand.b"));

  const auto dec = decoder_forward(tape, p, dec_in, batch.size, ctx, &layer_tag, &batch);
  out.probs = dec.probs;
  out.durations = dec.durations;

  if (config_.encoding == EncodingKind::Discrete) {
    out.loss = loss_discrete(tape, out.probs, batch.tokens, out.mu, out.logvar, config_.beta,
                             batch.size);
  } else {
    out.loss = loss_continuous(tape, out.probs, out.durations, batch.tokens, batch.durations,
                               out.mu, out.logvar, config_.alpha, config_.beta, batch.size);
  }
  out.param_nodes.assign(p.cache.begin(), p.cache.end());
  return out;
}

void VaeModel::decode_latent(const Tensor& z, std::vector<Schedule>& out, uint64_t& degenerate) {
  if (z.rank() != 2 || z.shape[1] != config_.latent_size) {
    throw DataError("decode_latent: expected (n, " + std::to_string(config_.latent_size) +
                    ") latent draws, got " + z.shape_str());
  }
  const int batch = z.shape[0];
  Tape tape;
  tape.set_grad_enabled(false);
  ParamNodes p{tape, params_, {}};
  StepCtx ctx;  // eval mode
  int layer_tag = 0;

  const auto dec_in = tape.linear(tape.value(z), p("latent.expand.w"), p("latent.expand.b"));
  const auto dec = decoder_forward(tape, p, dec_in, batch, ctx, &layer_tag, nullptr);

  const auto ids = tensor::argmax_last(tape.val(dec.probs));
  const int len = config_.sequence_length();

  if (config_.encoding == EncodingKind::Discrete) {
    for (int b = 0; b < batch; ++b) {
      encoding::DiscreteEncoding enc;
      enc.step_min = config_.step_min;
      enc.tokens.reserve(static_cast<size_t>(len));
      for (int t = 0; t < len; ++t) {
        enc.tokens.push_back(static_cast<uint8_t>(ids[static_cast<size_t>(b) * len + t]));
      }
      out.push_back(encoding::decode_discrete(enc));
    }
    return;
  }

  const auto& durs = tape.val(dec.durations);
  for (int b = 0; b < batch; ++b) {
    std::vector<encoding::ContinuousToken> raw;
    raw.reserve(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
      raw.push_back({ids[static_cast<size_t>(b) * len + t],
                     static_cast<double>(durs.data[static_cast<size_t>(b) * len + t])});
    }
    try {
      out.push_back(encoding::decode_continuous(raw));
    } catch (const DataError&) {
      ++degenerate;  // recorded, never resampled
    }
  }
}

void VaeModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "SCHEDVAE1\n";
  write_model_config(config_, out);
  out << "[binary]\n";
  tensor::save_checkpoint(params_, out);
}

VaeModel VaeModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "SCHEDVAE1") {
    throw DataError(path + ": not a model checkpoint");
  }
  std::string header;
  while (std::getline(in, line)) {
    if (line == "[binary]") break;
    header += line;
    header += '\n';
  }
  std::istringstream header_in(header);
  const ModelConfig cfg = parse_model_config(header_in, path);
  return VaeModel(cfg, tensor::load_checkpoint(in, path));
}

}  // namespace schedsyn::vae
