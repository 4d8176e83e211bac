#include <cmath>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "misynth/checkpoint.hpp"
#include "misynth/cvae.hpp"
#include "misynth/errors.hpp"
#include "misynth/gradcheck.hpp"
#include "misynth/train.hpp"

using namespace misynth;
using namespace misynth::test;

namespace {

// Analytic KL against a Monte Carlo estimate of E_q[log q - log p].
double mc_kl(const std::vector<double>& mu, const std::vector<double>& log_var,
             std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double sigma = std::exp(0.5 * log_var[j]);
      const double z = mu[j] + sigma * rng.normal();
      const double log_q = -0.5 * (std::log(2.0 * std::numbers::pi) + log_var[j]) -
                           0.5 * (z - mu[j]) * (z - mu[j]) / (sigma * sigma);
      const double log_p = -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
      acc += log_q - log_p;
    }
  }
  return acc / static_cast<double>(draws);
}

EpochStore tiny_labeled_store(std::size_t subjects, std::size_t per_class, std::uint64_t seed) {
  EpochStore store(160.0, sensorimotor_channels(), 400);
  std::uint64_t s = seed;
  for (std::size_t subj = 0; subj < subjects; ++subj) {
    for (const Label label : {Label::Right, Label::Left, Label::Feet}) {
      for (std::size_t i = 0; i < per_class; ++i) {
        Epoch e = make_epoch(15, 400, s++, label);
        for (auto& v : e.data) v *= 0.3f;
        e.subject_id = "S" + std::to_string(subj);
        store.append(e);
      }
    }
  }
  return store;
}

}  // namespace

TEST_SUITE("cvae") {

TEST_CASE("encode: posterior heads are (batch, latent) and condition-free") {
  CvaeModel<float> model(CvaeConfig{}, 7);
  Tensor<float> x(4, 1, 15, 400);
  Rng rng(2);
  for (auto& v : x.flat()) v = static_cast<float>(rng.normal(0.0, 0.3));
  auto [mu, lv] = model.encode(x, true);
  CHECK(mu.shape() == std::array<std::size_t, 4>{4, 1, 1, 10});
  CHECK(lv.shape() == std::array<std::size_t, 4>{4, 1, 1, 10});
  CHECK_FALSE(mu.has_nonfinite());
  CHECK_FALSE(lv.has_nonfinite());

  CHECK_THROWS_AS(model.encode(Tensor<float>(4, 1, 15, 300), true), InputError);
}

TEST_CASE("encode: identical inputs give identical posterior rows in inference") {
  CvaeModel<float> model(CvaeConfig{}, 7);
  model.init_running_stats();
  Tensor<float> x(2, 1, 15, 400);
  Rng rng(3);
  for (std::size_t h = 0; h < 15; ++h) {
    for (std::size_t w = 0; w < 400; ++w) {
      const float v = static_cast<float>(rng.normal());
      x.at(0, 0, h, w) = v;
      x.at(1, 0, h, w) = v;
    }
  }
  auto [mu, lv] = model.encode(x, false);
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(mu.at(0, 0, 0, j) == mu.at(1, 0, 0, j));
    CHECK(lv.at(0, 0, 0, j) == lv.at(1, 0, 0, j));
  }
}

TEST_CASE("encode: all-zero input stays finite through batch norm") {
  CvaeModel<float> model(CvaeConfig{}, 7);
  Tensor<float> x(2, 1, 15, 400);
  auto [mu, lv] = model.encode(x, true);
  CHECK_FALSE(mu.has_nonfinite());
  CHECK_FALSE(lv.has_nonfinite());
}

TEST_CASE("reparameterize: degenerate variance, determinism, sample mean") {
  Tensor<float> mu(1, 1, 1, 10);
  Tensor<float> lv(1, 1, 1, 10);
  for (std::size_t j = 0; j < 10; ++j) {
    mu.at(0, 0, 0, j) = static_cast<float>(j) - 4.5f;
    lv.at(0, 0, 0, j) = -80.0f;  // sigma ~ 4e-18
  }
  Rng rng(4);
  const auto eps = normal_tensor<float>(1, 1, 1, 10, rng);
  const auto z = CvaeModel<float>::reparameterize(mu, lv, eps);
  for (std::size_t j = 0; j < 10; ++j) CHECK(z.at(0, 0, 0, j) == doctest::Approx(mu.at(0, 0, 0, j)));

  Rng r1(9), r2(9);
  const auto e1 = normal_tensor<float>(1, 1, 1, 10, r1);
  const auto e2 = normal_tensor<float>(1, 1, 1, 10, r2);
  for (std::size_t j = 0; j < 10; ++j) CHECK(e1.at(0, 0, 0, j) == e2.at(0, 0, 0, j));

  // Monte Carlo: the sample mean approaches mu at the 4 sigma / sqrt(n) level.
  Tensor<double> mu_d(1, 1, 1, 10), lv_d(1, 1, 1, 10);
  for (std::size_t j = 0; j < 10; ++j) {
    mu_d.at(0, 0, 0, j) = 0.3 * static_cast<double>(j) - 1.0;
    lv_d.at(0, 0, 0, j) = 0.4;  // sigma = e^0.2
  }
  const double sigma = std::exp(0.2);
  constexpr std::size_t kDraws = 1'000'000;
  std::vector<double> mean(10, 0.0);
  Rng mc(123);
  for (std::size_t s = 0; s < kDraws; ++s) {
    for (std::size_t j = 0; j < 10; ++j) {
      mean[j] += mu_d.at(0, 0, 0, j) + sigma * mc.normal();
    }
  }
  const double bound = 4.0 * sigma / std::sqrt(static_cast<double>(kDraws));
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(std::abs(mean[j] / kDraws - mu_d.at(0, 0, 0, j)) < bound);
  }
}

TEST_CASE("decode: concatenation width and output shape") {
  CvaeConfig cfg;
  CvaeModel<float> model(cfg, 7);
  CHECK(cfg.latent_dim + cfg.n_classes == 13);

  Tensor<float> z(1, 1, 1, 10);
  const Tensor<float> c = condition_tensor({Label::Left});
  CHECK_THROWS_AS(model.decode(z, Tensor<float>(1, 1, 1, 2), true), InputError);
  model.init_running_stats();
  const Tensor<float> x_hat = model.decode(z, c, false);
  CHECK(x_hat.shape() == std::array<std::size_t, 4>{1, 1, 15, 400});
  CHECK_FALSE(x_hat.has_nonfinite());
}

TEST_CASE("kl_term: closed form against Monte Carlo") {
  Tensor<double> mu(1, 1, 1, 10), lv(1, 1, 1, 10);
  CHECK(CvaeModel<double>::kl_term(mu, lv) == 0.0);  // q == p exactly

  for (std::size_t j = 0; j < 10; ++j) mu.at(0, 0, 0, j) = 1.0;
  CHECK(CvaeModel<double>::kl_term(mu, lv) == doctest::Approx(5.0));

  Rng rng(77);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> m(10), l(10);
    for (std::size_t j = 0; j < 10; ++j) {
      m[j] = rng.uniform(-1.0, 1.0);
      l[j] = rng.uniform(-1.0, 1.0);
      mu.at(0, 0, 0, j) = m[j];
      lv.at(0, 0, 0, j) = l[j];
    }
    const double closed = CvaeModel<double>::kl_term(mu, lv);
    const double estimate = mc_kl(m, l, 1'000'000, 1000 + trial);
    CHECK(std::abs(closed - estimate) < 0.01);
  }
}

TEST_CASE("kl_term: non-negative over random posteriors") {
  Rng rng(78);
  Tensor<double> mu(1, 1, 1, 10), lv(1, 1, 1, 10);
  for (int trial = 0; trial < 1000; ++trial) {
    for (std::size_t j = 0; j < 10; ++j) {
      mu.at(0, 0, 0, j) = rng.normal(0.0, 2.0);
      lv.at(0, 0, 0, j) = rng.normal(0.0, 2.0);
    }
    CHECK(CvaeModel<double>::kl_term(mu, lv) >= 0.0);
  }
}

TEST_CASE("recon_term: zero at equality, counts elements, symmetric") {
  Tensor<float> x(2, 1, 15, 400);
  Rng rng(5);
  for (auto& v : x.flat()) v = static_cast<float>(rng.normal());
  CHECK(CvaeModel<float>::recon_term(x, x) == 0.0);

  Tensor<float> shifted = x;
  for (auto& v : shifted.flat()) v += 1.0f;
  CHECK(CvaeModel<float>::recon_term(x, shifted) == doctest::Approx(6000.0));
  CHECK(CvaeModel<float>::recon_term(x, shifted) ==
        CvaeModel<float>::recon_term(shifted, x));

  CHECK_THROWS_AS(CvaeModel<float>::recon_term(x, Tensor<float>(2, 1, 15, 300)), InputError);
}

TEST_CASE("loss: total is exactly recon plus kl") {
  CvaeModel<float> model(CvaeConfig{}, 11);
  Tensor<float> x(2, 1, 15, 400);
  Rng rng(6);
  for (auto& v : x.flat()) v = static_cast<float>(rng.normal(0.0, 0.3));
  const Tensor<float> c = condition_tensor({Label::Right, Label::Feet});
  const auto eps = normal_tensor<float>(2, 1, 1, 10, rng);
  const LossParts parts = model.loss(x, c, eps, true);
  CHECK(parts.total == parts.recon + parts.kl);
  CHECK(parts.recon >= 0.0);
  CHECK(parts.kl >= 0.0);
  CHECK(parts.total >= parts.kl);
}

TEST_CASE("loss: zeroed heads and zeroed output gamma isolate the data term") {
  CvaeModel<float> model(CvaeConfig{}, 11);
  // Force mu = 0, log_var = 0 and a decoder that emits exactly zero.
  for (auto* p : model.parameters()) {
    if (p->name.rfind("enc_mu.", 0) == 0 || p->name.rfind("enc_log_var.", 0) == 0 ||
        p->name == "dec_bn_temporal.gamma" || p->name == "dec_bn_temporal.beta") {
      p->value.set_zero();
    }
  }
  model.init_running_stats();

  Tensor<float> x(3, 1, 15, 400);
  Rng rng(8);
  for (auto& v : x.flat()) v = static_cast<float>(rng.normal(0.0, 0.5));
  const Tensor<float> c = condition_tensor({Label::Right, Label::Left, Label::Feet});
  const auto eps = normal_tensor<float>(3, 1, 1, 10, rng);
  const LossParts parts = model.loss(x, c, eps, false);

  CHECK(parts.kl == 0.0);
  double expected = 0.0;
  for (const float v : x.flat()) expected += static_cast<double>(v) * v;
  expected /= 3.0;
  CHECK(parts.recon == doctest::Approx(expected).epsilon(1e-6));
  CHECK(parts.total == parts.recon);
}

TEST_CASE("count_parameters: itemized layers, paper-total within five percent") {
  CvaeModel<float> model(CvaeConfig{}, 1);
  const ParameterCount count = model.count_parameters();

  auto row = [&](const std::string& name) {
    for (const auto& r : count.layers) {
      if (r.layer == name) return r;
    }
    FAIL("missing layer row ", name);
    return LayerParamCount{};
  };
  CHECK(row("enc_conv_temporal").weights == 200);
  CHECK(row("enc_conv_temporal").biases == 5);
  CHECK(row("enc_mu").total() + row("enc_log_var").total() == 20020);
  CHECK(row("dec_dense").total() == 14000);

  // Count agrees with the actual allocated parameter tensors.
  std::size_t from_tensors = 0;
  for (const auto* p : model.parameters()) from_tensors += p->value.size();
  CHECK(count.trainable == from_tensors);

  CHECK(count.trainable == 35218);
  CHECK(std::abs(static_cast<double>(count.trainable) - 34214.0) / 34214.0 < 0.05);
  CHECK(count.non_trainable_running_stats == 32);
}

TEST_CASE("checkpoint: bit-exact parameter round trip and probe equality") {
  TempDir dir("ckpt");
  const EpochStore train_store = tiny_labeled_store(2, 4, 100);
  const EpochStore val_store = tiny_labeled_store(1, 2, 500);
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.max_epochs = 2;
  cfg.patience = 2;
  cfg.seed = 77;
  Checkpoint ckpt = train_cvae(train_store, val_store, cfg, nullptr);
  const auto path = dir.path() / "model.ckpt";
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);

  auto p0 = ckpt.model.parameters();
  auto p1 = loaded.model.parameters();
  REQUIRE(p0.size() == p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) {
    CHECK(p0[i]->name == p1[i]->name);
    CHECK(std::memcmp(p0[i]->value.data(), p1[i]->value.data(),
                      p0[i]->value.size() * sizeof(float)) == 0);
  }

  // A reloaded model reproduces inference outputs to the bit.
  Tensor<float> x(2, 1, 15, 400);
  Rng rng(9);
  for (auto& v : x.flat()) v = static_cast<float>(rng.normal(0.0, 0.3));
  auto [mu_a, lv_a] = ckpt.model.encode(x, false);
  auto [mu_b, lv_b] = loaded.model.encode(x, false);
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    CHECK(mu_a.flat()[i] == mu_b.flat()[i]);
    CHECK(lv_a.flat()[i] == lv_b.flat()[i]);
  }

  CHECK(loaded.history.size() == ckpt.history.size());
  CHECK(loaded.best_epoch == ckpt.best_epoch);
  CHECK(loaded.train_config.seed == cfg.seed);
  CHECK(loaded.adam_t == ckpt.adam_t);
}

TEST_CASE("checkpoint: truncation and corruption are integrity errors") {
  TempDir dir("ckpt_bad");
  const EpochStore train_store = tiny_labeled_store(1, 4, 300);
  const EpochStore val_store = tiny_labeled_store(1, 2, 400);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 1;
  cfg.patience = 1;
  Checkpoint ckpt = train_cvae(train_store, val_store, cfg, nullptr);
  const auto path = dir.path() / "model.ckpt";
  save_checkpoint(ckpt, path);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 17);
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);

  std::ofstream(dir.path() / "junk.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "junk.ckpt"), IntegrityError);
}

TEST_CASE("train: best validation tracked, history complete, reproducible") {
  const EpochStore train_store = tiny_labeled_store(2, 6, 200);
  const EpochStore val_store = tiny_labeled_store(1, 3, 600);
  TrainConfig cfg;
  cfg.batch_size = 9;
  cfg.max_epochs = 4;
  cfg.patience = 4;
  cfg.seed = 31;

  Checkpoint a = train_cvae(train_store, val_store, cfg, nullptr);
  REQUIRE(a.history.size() >= 2);
  CHECK(a.history.front().epoch == 0);
  CHECK(a.initial_val_loss == a.history.front().val_total);
  double best_seen = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < a.history.size(); ++i) {
    best_seen = std::min(best_seen, a.history[i].val_total);
  }
  CHECK(a.best_val_loss == best_seen);

  Checkpoint b = train_cvae(train_store, val_store, cfg, nullptr);
  REQUIRE(b.history.size() == a.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_total == b.history[i].train_total);
    CHECK(a.history[i].val_total == b.history[i].val_total);
  }
  auto pa = a.model.parameters();
  auto pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::memcmp(pa[i]->value.data(), pb[i]->value.data(),
                      pa[i]->value.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("train: configuration validation") {
  const EpochStore train_store = tiny_labeled_store(1, 3, 900);
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train_cvae(train_store, train_store, cfg, nullptr), InputError);
  cfg = TrainConfig{};
  EpochStore resting(160.0, sensorimotor_channels(), 400);
  resting.append(make_epoch(15, 400, 1));
  resting.append(make_epoch(15, 400, 2));
  CHECK_THROWS_AS(train_cvae(resting, resting, cfg, nullptr), InputError);  // unlabeled
}

TEST_CASE("full loss gradient passes finite differences on a reduced model") {
  CvaeConfig cfg;
  cfg.n_channels = 4;
  cfg.n_samples = 16;
  cfg.latent_dim = 3;
  cfg.kernels_per_layer = 2;
  cfg.temporal_kernel = 5;
  CvaeModel<double> model(cfg, 21);
  Rng rng(22);
  Tensor<double> x(2, 1, 4, 16);
  for (auto& v : x.flat()) v = rng.normal(0.0, 0.5);
  const Tensor<double> c = condition_tensor({Label::Left, Label::Feet}).cast<double>();
  Tensor<double> eps(2, 1, 1, 3);
  for (auto& v : eps.flat()) v = rng.normal();

  model.zero_grad();
  model.loss_backward(x, c, eps, true);
  double g_max = 0.0;
  for (auto* p : model.parameters()) {
    for (const double g : p->grad.flat()) g_max = std::max(g_max, std::abs(g));
  }
  auto loss = [&] { return model.loss(x, c, eps, true).total; };
  for (auto* p : model.parameters()) {
    const auto r = check_gradient(
        p->name, p->value.flat(), {p->grad.flat().begin(), p->grad.flat().end()}, loss, 1e-5, 24,
        rng, 1e-3 * g_max);
    INFO(p->name);
    CHECK(r.max_rel_err < 1e-4);
  }
}

}  // TEST_SUITE("cvae")
