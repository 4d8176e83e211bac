#include "misynth/train.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "misynth/errors.hpp"

namespace misynth {

void TrainConfig::validate() const {
  if (batch_size < 2) throw InputError("train config: batch_size must be >= 2 (batch norm)");
  if (max_epochs == 0) throw InputError("train config: max_epochs must be positive");
  if (patience == 0) throw InputError("train config: patience must be positive");
  if (latent_dim == 0 || kernels_per_layer == 0) {
    throw InputError("train config: latent_dim and kernels_per_layer must be positive");
  }
  if (learning_rate <= 0.0) throw InputError("train config: learning_rate must be positive");
  if (val_noise_passes == 0) throw InputError("train config: val_noise_passes must be positive");
}

void write_train_log_csv(const std::vector<EpochLogRow>& history, std::ostream& out) {
  out << "epoch,train_total,train_recon,train_kl,val_total,val_recon,val_kl,wall_s\n";
  out << std::setprecision(10);
  for (const auto& r : history) {
    out << r.epoch << "," << r.train_total << "," << r.train_recon << "," << r.train_kl << ","
        << r.val_total << "," << r.val_recon << "," << r.val_kl << "," << r.wall_s << "\n";
  }
}

Tensor<float> epochs_to_tensor(const EpochStore& store, const std::vector<std::size_t>& indices) {
  Tensor<float> x(indices.size(), 1, store.n_channels(), store.n_samples());
  const std::size_t stride = store.n_channels() * store.n_samples();
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const float* src = store.epoch_data(indices[n]);
    std::copy(src, src + stride, &x.at(n, 0, 0, 0));
  }
  return x;
}

std::vector<Label> labels_of(const EpochStore& store, const std::vector<std::size_t>& indices) {
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (const std::size_t i : indices) {
    const auto l = store.label(i);
    if (!l) throw InputError("training: epoch " + std::to_string(i) + " has no class label");
    labels.push_back(*l);
  }
  return labels;
}

namespace {

double param_norm(CvaeModel<float>& model) {
  double s = 0.0;
  for (const auto* p : model.parameters()) {
    for (const float v : p->value.flat()) s += static_cast<double>(v) * v;
  }
  return std::sqrt(s);
}

// Validation loss: batch norm inference statistics, stochastic noise averaged
// over a fixed number of passes.
LossParts validation_loss(CvaeModel<float>& model, const EpochStore& val_store,
                          std::size_t passes, Rng& noise_rng) {
  std::vector<std::size_t> all(val_store.n_epochs());
  std::iota(all.begin(), all.end(), 0);
  const Tensor<float> x = epochs_to_tensor(val_store, all);
  const Tensor<float> c = condition_tensor(labels_of(val_store, all));
  LossParts mean;
  for (std::size_t p = 0; p < passes; ++p) {
    const Tensor<float> eps =
        normal_tensor<float>(all.size(), 1, 1, model.config().latent_dim, noise_rng);
    const LossParts parts = model.loss(x, c, eps, /*training=*/false);
    mean.total += parts.total;
    mean.recon += parts.recon;
    mean.kl += parts.kl;
  }
  mean.total /= static_cast<double>(passes);
  mean.recon /= static_cast<double>(passes);
  mean.kl /= static_cast<double>(passes);
  return mean;
}

struct Snapshot {
  std::vector<Tensor<float>> params;
  std::vector<Tensor<float>> bn_stats;
  long long adam_t = 0;
  std::vector<Tensor<float>> adam_m, adam_v;
};

Snapshot take_snapshot(CvaeModel<float>& model, const Adam<float>& opt) {
  Snapshot s;
  for (const auto* p : model.parameters()) s.params.push_back(p->value);
  for (const auto* bn : model.batch_norms()) {
    s.bn_stats.push_back(bn->running_mean);
    s.bn_stats.push_back(bn->running_var);
  }
  s.adam_t = opt.step_count();
  s.adam_m = opt.first_moments();
  s.adam_v = opt.second_moments();
  return s;
}

void restore_snapshot(const Snapshot& s, CvaeModel<float>& model, Adam<float>& opt) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = s.params[i];
  auto bns = model.batch_norms();
  for (std::size_t i = 0; i < bns.size(); ++i) {
    bns[i]->running_mean = s.bn_stats[2 * i];
    bns[i]->running_var = s.bn_stats[2 * i + 1];
  }
  opt.restore(s.adam_t, s.adam_m, s.adam_v);
}

}  // namespace

Checkpoint train_cvae(const EpochStore& train_store, const EpochStore& val_store,
                      const TrainConfig& cfg, std::ostream* progress) {
  cfg.validate();
  if (!train_store.all_labeled() || !val_store.all_labeled()) {
    throw InputError("training: both stores must be fully labeled");
  }
  if (train_store.n_epochs() < cfg.batch_size) {
    throw InputError("training: fewer epochs than one batch");
  }

  CvaeConfig model_cfg;
  model_cfg.n_channels = train_store.n_channels();
  model_cfg.n_samples = train_store.n_samples();
  model_cfg.latent_dim = cfg.latent_dim;
  model_cfg.kernels_per_layer = cfg.kernels_per_layer;

  Checkpoint ckpt(model_cfg);
  ckpt.train_config = cfg;
  ckpt.model = CvaeModel<float>(model_cfg, cfg.seed);
  // Identity stats let the untrained baseline run batch norm in inference mode.
  ckpt.model.init_running_stats();

  Adam<float>::Hyper hyper{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps};
  ckpt.adam_hyper = hyper;
  Adam<float> opt(hyper);
  opt.attach(ckpt.model.parameters());

  // Independent deterministic streams for shuffling, training noise and
  // validation noise.
  Rng shuffle_rng(cfg.seed ^ 0x53485546ULL);
  Rng noise_rng(cfg.seed ^ 0x454e4f49ULL);
  Rng val_rng(cfg.seed ^ 0x56414c4cULL);

  const auto t_start = std::chrono::steady_clock::now();
  auto wall = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  {
    EpochLogRow row;
    row.epoch = 0;
    std::vector<std::size_t> all(train_store.n_epochs());
    std::iota(all.begin(), all.end(), 0);
    const Tensor<float> x = epochs_to_tensor(train_store, all);
    const Tensor<float> c = condition_tensor(labels_of(train_store, all));
    const Tensor<float> eps =
        normal_tensor<float>(all.size(), 1, 1, model_cfg.latent_dim, val_rng);
    const LossParts baseline = ckpt.model.loss(x, c, eps, /*training=*/false);
    row.train_total = baseline.total;
    row.train_recon = baseline.recon;
    row.train_kl = baseline.kl;
    const LossParts val = validation_loss(ckpt.model, val_store, cfg.val_noise_passes, val_rng);
    row.val_total = val.total;
    row.val_recon = val.recon;
    row.val_kl = val.kl;
    row.wall_s = wall();
    ckpt.history.push_back(row);
    ckpt.initial_val_loss = val.total;
    if (progress) {
      *progress << "epoch 0 (baseline): val_total=" << val.total << "\n";
    }
  }

  // Best-so-far tracking starts at the first trained epoch; the untrained
  // baseline is recorded for reporting but does not gate early stopping.
  Snapshot best = take_snapshot(ckpt.model, opt);
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t epochs_since_improvement = 0;

  std::vector<std::size_t> order(train_store.n_epochs());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double sum_total = 0, sum_recon = 0, sum_kl = 0;
    std::size_t n_seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) continue;  // a 1-trial remainder cannot batch-normalize
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      const Tensor<float> x = epochs_to_tensor(train_store, batch);
      const Tensor<float> c = condition_tensor(labels_of(train_store, batch));
      const Tensor<float> eps =
          normal_tensor<float>(batch.size(), 1, 1, model_cfg.latent_dim, noise_rng);
      ckpt.model.zero_grad();
      LossParts parts;
      try {
        parts = ckpt.model.loss_backward(x, c, eps, /*training=*/true);
      } catch (const NumericError& e) {
        throw NumericError("training: epoch " + std::to_string(epoch) + ", batch at trial " +
                           std::to_string(start) + ": " + e.what());
      }
      if (!std::isfinite(parts.total)) {
        throw NumericError("training: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch at trial " + std::to_string(start) +
                           " (parameter norm " + std::to_string(param_norm(ckpt.model)) + ")");
      }
      opt.step();
      const auto bs = static_cast<double>(batch.size());
      sum_total += parts.total * bs;
      sum_recon += parts.recon * bs;
      sum_kl += parts.kl * bs;
      n_seen += batch.size();
    }

    EpochLogRow row;
    row.epoch = epoch;
    row.train_total = sum_total / static_cast<double>(n_seen);
    row.train_recon = sum_recon / static_cast<double>(n_seen);
    row.train_kl = sum_kl / static_cast<double>(n_seen);
    const LossParts val = validation_loss(ckpt.model, val_store, cfg.val_noise_passes, val_rng);
    row.val_total = val.total;
    row.val_recon = val.recon;
    row.val_kl = val.kl;
    row.wall_s = wall();
    ckpt.history.push_back(row);
    if (progress) {
      *progress << "epoch " << epoch << ": train_total=" << row.train_total
                << " val_total=" << row.val_total << "\n";
    }

    if (val.total < best_val) {
      best_val = val.total;
      best_epoch = epoch;
      best = take_snapshot(ckpt.model, opt);
      epochs_since_improvement = 0;
    } else {
      ++epochs_since_improvement;
      if (epochs_since_improvement >= cfg.patience) {
        if (progress) {
          *progress << "early stop after epoch " << epoch << " (best epoch " << best_epoch << ")\n";
        }
        break;
      }
    }
  }

  restore_snapshot(best, ckpt.model, opt);
  ckpt.best_epoch = best_epoch;
  ckpt.best_val_loss = best_val;
  ckpt.adam_t = opt.step_count();
  ckpt.adam_m = opt.first_moments();
  ckpt.adam_v = opt.second_moments();
  return ckpt;
}

}  // namespace misynth
