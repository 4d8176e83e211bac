#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "misynth/adam.hpp"
#include "misynth/cvae.hpp"
#include "misynth/store.hpp"

namespace misynth {

struct TrainConfig {
  std::size_t batch_size = 50;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::size_t latent_dim = 10;
  std::size_t kernels_per_layer = 5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::size_t val_noise_passes = 4;
  // Reconstruction summed over the elements of each trial, KL over latent
  // dims, both averaged over batch. Recorded in checkpoints.
  std::string loss_weighting = "sum_per_trial";

  void validate() const;
};

struct EpochLogRow {
  std::size_t epoch = 0;  // 0 = pre-training baseline
  double train_total = 0, train_recon = 0, train_kl = 0;
  double val_total = 0, val_recon = 0, val_kl = 0;
  double wall_s = 0;
};

void write_train_log_csv(const std::vector<EpochLogRow>& history, std::ostream& out);

// Everything needed to resume or run inference: model parameters and batch
// norm statistics, optimizer state, configuration, and the training history.
struct Checkpoint {
  CvaeModel<float> model;
  TrainConfig train_config;
  std::vector<EpochLogRow> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double initial_val_loss = 0.0;
  Adam<float>::Hyper adam_hyper;
  long long adam_t = 0;
  std::vector<Tensor<float>> adam_m, adam_v;

  explicit Checkpoint(const CvaeConfig& cfg) : model(cfg, 0) {}
};

// Mini-batch Adam training with per-epoch validation (batch norm in
// inference mode, noise averaged over val_noise_passes draws) and
// best-validation early stopping. Deterministic given the seed when run
// single-threaded. `progress`, when given, receives one line per epoch.
Checkpoint train_cvae(const EpochStore& train_store, const EpochStore& val_store,
                      const TrainConfig& cfg, std::ostream* progress = nullptr);

// Batch assembly helpers shared by training, generation and the CLI.
Tensor<float> epochs_to_tensor(const EpochStore& store, const std::vector<std::size_t>& indices);
std::vector<Label> labels_of(const EpochStore& store, const std::vector<std::size_t>& indices);

}  // namespace misynth
