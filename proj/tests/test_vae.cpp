#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "core/error.hpp"
#include "helpers.hpp"
#include "vae/model.hpp"

using namespace schedsyn;
using core::Activity;
using tensor::IntArray;
using tensor::Tape;
using tensor::Tensor;
using vae::Architecture;
using vae::EncodingKind;
using vae::ModelConfig;
using vae::VaeModel;
using schedsyn::testing::make_schedule;

namespace {

// Gauss quadrature stand-in: fine Simpson integration of the KL integrand
// between the two Gaussians, independent of the closed form under test.
double kl_quadrature(double mu, double logvar) {
  const double sigma = std::exp(0.5 * logvar);
  const double lo = std::min(mu - 12 * sigma, -12.0);
  const double hi = std::max(mu + 12 * sigma, 12.0);
  const int n = 40000;  // even
  const double h = (hi - lo) / n;
  auto integrand = [&](double x) {
    const double p = std::exp(-0.5 * (x - mu) * (x - mu) / (sigma * sigma)) /
                     (sigma * std::sqrt(2.0 * M_PI));
    if (p < 1e-300) return 0.0;
    const double log_p = -0.5 * (x - mu) * (x - mu) / (sigma * sigma) -
                         std::log(sigma * std::sqrt(2.0 * M_PI));
    const double log_q = -0.5 * x * x - std::log(std::sqrt(2.0 * M_PI));
    return p * (log_p - log_q);
  };
  double acc = integrand(lo) + integrand(hi);
  for (int i = 1; i < n; ++i) acc += integrand(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

ModelConfig tiny_config(EncodingKind enc, Architecture arch) {
  ModelConfig cfg;
  cfg.encoding = enc;
  cfg.architecture = arch;
  cfg.blocks = 2;
  cfg.block_size = 16;
  cfg.latent_size = 4;
  cfg.batch_size = 8;
  cfg.step_min = 60;  // length 24 keeps the discrete tests fast
  return cfg;
}

std::vector<core::Schedule> sample_schedules(int n, uint64_t seed) {
  rng::Sequence rng(seed);
  std::vector<core::Schedule> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(schedsyn::testing::random_schedule(rng, 10));
  }
  return out;
}

}  // namespace

TEST_CASE("kl_divergence closed form") {
  Tensor zero({1, 3});
  CHECK(vae::kl_divergence(zero, zero) == 0.0);

  Tensor mu({1, 1});
  mu.data = {1.0f};
  Tensor lv = Tensor::zeros({1, 1});
  CHECK(vae::kl_divergence(mu, lv) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(kl_quadrature(1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("kl_divergence matches the quadrature oracle on 100 random pairs") {
  rng::Sequence rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const double mu = rng.uniform01() * 4.0 - 2.0;
    const double lv = rng.uniform01() * 3.0 - 2.0;
    Tensor mu_t({1, 1});
    mu_t.data = {static_cast<float>(mu)};
    Tensor lv_t({1, 1});
    lv_t.data = {static_cast<float>(lv)};
    const double closed = vae::kl_divergence(mu_t, lv_t);
    const double quad =
        kl_quadrature(static_cast<double>(mu_t.data[0]), static_cast<double>(lv_t.data[0]));
    CHECK(closed == doctest::Approx(quad).epsilon(1e-5));
    CHECK(closed >= 0.0);
  }
}

TEST_CASE("kl tape node agrees with the closed form and is batch-averaged") {
  rng::Sequence rng(62);
  Tensor m({4, 6});
  Tensor lv({4, 6});
  for (auto& x : m.data) x = static_cast<float>(rng.uniform01() - 0.5);
  for (auto& x : lv.data) x = static_cast<float>(rng.uniform01() - 0.5);
  Tape tape;
  const auto node = vae::kl_node(tape, tape.value(m), tape.value(lv), 4);
  CHECK(tape.val64(node) == doctest::Approx(vae::kl_divergence(m, lv)).epsilon(1e-6));
}

TEST_CASE("reparameterisation: zero noise returns mu, unit sigma returns noise") {
  // z = mu + exp(0.5 logvar) * eps wired inside forward; check the algebra
  // directly on tape ops.
  Tape tape;
  Tensor mu({2, 3});
  mu.data = {1, 2, 3, 4, 5, 6};
  Tensor lv = Tensor::zeros({2, 3});
  Tensor eps = Tensor::zeros({2, 3});
  const auto z =
      tape.add(tape.value(mu), tape.mul(tape.exp(tape.affine(tape.value(lv), 0.5f, 0.0f)),
                                        tape.value(eps)));
  CHECK(tape.val(z).data == mu.data);

  Tape t2;
  Tensor noise({2, 3});
  noise.data = {9, 8, 7, 6, 5, 4};
  const auto z2 = t2.add(t2.value(Tensor::zeros({2, 3})),
                         t2.mul(t2.exp(t2.affine(t2.value(Tensor::zeros({2, 3})), 0.5f, 0.0f)),
                                t2.value(noise)));
  CHECK(t2.val(z2).data == noise.data);

  // dz/dmu is the identity
  Tape t3;
  const auto mu_in = t3.input(Tensor::zeros({1, 3}));
  const auto z3 = t3.add(mu_in, t3.mul(t3.exp(t3.affine(t3.value(Tensor::zeros({1, 3})), 0.5f,
                                                        0.0f)),
                                       t3.value(Tensor::zeros({1, 3}))));
  t3.backward(t3.sum(z3));
  for (const float g : t3.grad(mu_in).data) CHECK(g == 1.0f);
}

TEST_CASE("loss_discrete fixtures") {
  Tape tape;
  const int batch = 2, len = 3, classes = 8;
  IntArray targets;
  targets.shape = {batch, len};
  targets.data = {0, 3, 7, 2, 2, 1};

  Tensor perfect({batch, len, classes});
  for (int r = 0; r < batch * len; ++r) {
    perfect.data[static_cast<size_t>(r) * classes + targets.data[static_cast<size_t>(r)]] = 1.0f;
  }
  const auto zero_mu = tape.value(Tensor::zeros({batch, 4}));
  const auto perfect_loss = vae::loss_discrete(tape, tape.value(perfect), targets, zero_mu,
                                               tape.value(Tensor::zeros({batch, 4})), 0.005, batch);
  CHECK(tape.val64(perfect_loss.total) == doctest::Approx(0.0).epsilon(1e-9));

  Tensor uniform = Tensor::full({batch, len, classes}, 1.0f / classes);
  const auto uni_loss = vae::loss_discrete(tape, tape.value(uniform), targets, zero_mu,
                                           tape.value(Tensor::zeros({batch, 4})), 0.005, batch);
  CHECK(tape.val64(uni_loss.ce) == doctest::Approx(std::log(8.0)).epsilon(1e-6));
}

TEST_CASE("loss_continuous fixtures") {
  Tape tape;
  const int batch = 2, len = 4, classes = 10;
  IntArray targets;
  targets.shape = {batch, len};
  targets.data = {8, 0, 9, 9, 8, 1, 2, 9};
  Tensor target_durs({batch, len});
  target_durs.data = {0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.5f, 0.5f, 0.0f};

  Tensor perfect({batch, len, classes});
  for (int r = 0; r < batch * len; ++r) {
    perfect.data[static_cast<size_t>(r) * classes + targets.data[static_cast<size_t>(r)]] = 1.0f;
  }
  const auto zero_mu = tape.value(Tensor::zeros({batch, 4}));
  const auto zero_lv = tape.value(Tensor::zeros({batch, 4}));
  const auto exact =
      vae::loss_continuous(tape, tape.value(perfect), tape.value(target_durs), targets,
                           target_durs, zero_mu, zero_lv, 200.0, 0.01, batch);
  CHECK(tape.val64(exact.total) == doctest::Approx(0.0).epsilon(1e-9));

  // every duration off by 0.1 with alpha 200 adds exactly 200 * 0.01
  Tensor off = target_durs;
  for (auto& d : off.data) d += 0.1f;
  const auto shifted =
      vae::loss_continuous(tape, tape.value(perfect), tape.value(off), targets, target_durs,
                           zero_mu, zero_lv, 200.0, 0.01, batch);
  CHECK(tape.val64(shifted.mse) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(tape.val64(shifted.total) == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("embedding shapes follow the published block sizes") {
  // DiscCNN: 144 tokens embed to (144, 512)
  ModelConfig disc = vae::preset("DiscCNN");
  VaeModel disc_model(disc, 1);
  const auto schedules = sample_schedules(2, 99);
  const auto batch = vae::make_batch(schedules, disc);
  CHECK(disc_model.params().named("embed.table").value.shape ==
        std::vector<int>{10, 512});
  CHECK(batch.tokens.shape == std::vector<int>{2, 144});

  // ContRNN: (16, 256) with the last column holding durations
  ModelConfig cont = vae::preset("ContRNN");
  VaeModel cont_model(cont, 1);
  CHECK(cont_model.params().named("embed.table").value.shape ==
        std::vector<int>{10, 255});
  const auto cbatch = vae::make_batch(schedules, cont);
  CHECK(cbatch.tokens.shape == std::vector<int>{2, 16});
  CHECK(cbatch.durations.shape == std::vector<int>{2, 16});
  // EOS padding rows carry duration zero
  const auto enc = encoding::encode_continuous(schedules[0]);
  for (size_t i = schedules[0].entries.size() + 1; i < enc.tokens.size(); ++i) {
    CHECK(enc.tokens[i].symbol == encoding::Vocab::kEos);
    CHECK(enc.tokens[i].duration == 0.0);
  }
}

TEST_CASE("all six variants run forward and backward with finite losses") {
  const auto schedules = sample_schedules(8, 123);
  for (const auto enc : {EncodingKind::Discrete, EncodingKind::Continuous}) {
    for (const auto arch : {Architecture::FF, Architecture::CNN, Architecture::RNN}) {
      CAPTURE(static_cast<int>(enc));
      CAPTURE(static_cast<int>(arch));
      ModelConfig cfg = tiny_config(enc, arch);
      VaeModel model(cfg, 7);
      const auto batch = vae::make_batch(schedules, cfg);
      Tensor eps({batch.size, cfg.latent_size});
      rng::Sequence rng(5);
      for (auto& e : eps.data) e = static_cast<float>(rng.normal01());

      Tape tape;
      const auto nodes = model.forward(tape, batch, eps, {11, 0, true});
      const double total = tape.val64(nodes.loss.total);
      CHECK(std::isfinite(total));
      CHECK(total > 0.0);
      tape.backward(nodes.loss.total);

      double grad_norm = 0.0;
      for (const auto& [idx, node] : nodes.param_nodes) {
        if (!model.params().at(idx).trainable) continue;
        for (const float g : tape.grad(node).data) {
          grad_norm += static_cast<double>(g) * g;
        }
      }
      CHECK(grad_norm > 0.0);
      CHECK(std::isfinite(grad_norm));
    }
  }
}

TEST_CASE("decoder output for a fixed z is identical across calls") {
  for (const auto arch : {Architecture::FF, Architecture::CNN, Architecture::RNN}) {
    ModelConfig cfg = tiny_config(EncodingKind::Continuous, arch);
    VaeModel model(cfg, 21);
    Tensor z({5, cfg.latent_size});
    rng::Sequence rng(3);
    for (auto& x : z.data) x = static_cast<float>(rng.normal01());

    std::vector<core::Schedule> first, second;
    uint64_t deg1 = 0, deg2 = 0;
    model.decode_latent(z, first, deg1);
    model.decode_latent(z, second, deg2);
    CHECK(first == second);
    CHECK(deg1 == deg2);
  }
}

TEST_CASE("model checkpoints round-trip through save/load") {
  ModelConfig cfg = tiny_config(EncodingKind::Continuous, Architecture::RNN);
  VaeModel model(cfg, 77);
  const std::string path = "/tmp/schedsyn_test_model.ckpt";
  model.save(path);
  VaeModel loaded = VaeModel::load(path);
  std::remove(path.c_str());

  CHECK(loaded.config().block_size == cfg.block_size);
  CHECK(loaded.config().encoding == cfg.encoding);

  Tensor z({4, cfg.latent_size});
  rng::Sequence rng(9);
  for (auto& x : z.data) x = static_cast<float>(rng.normal01());
  std::vector<core::Schedule> a, b;
  uint64_t da = 0, db = 0;
  model.decode_latent(z, a, da);
  loaded.decode_latent(z, b, db);
  CHECK(a == b);
  CHECK(da == db);
}

TEST_CASE("continuous duration head stays inside (0,1)") {
  ModelConfig cfg = tiny_config(EncodingKind::Continuous, Architecture::FF);
  VaeModel model(cfg, 31);
  const auto schedules = sample_schedules(6, 17);
  const auto batch = vae::make_batch(schedules, cfg);
  Tensor eps = Tensor::zeros({batch.size, cfg.latent_size});
  Tape tape;
  const auto nodes = model.forward(tape, batch, eps, {1, 0, false});
  for (const float d : tape.val(nodes.durations).data) {
    CHECK(d > 0.0f);
    CHECK(d < 1.0f);
  }
}
