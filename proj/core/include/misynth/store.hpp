#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "misynth/epoch.hpp"

namespace misynth {

// Collection of equally shaped epochs: a manifest plus one contiguous
// float32 payload (trial-major, channel-major within trial). Treated as
// immutable once populated; safe to share read-only across threads.
class EpochStore {
 public:
  EpochStore() = default;
  EpochStore(double sample_rate_hz, std::vector<std::string> channels, std::size_t n_samples);

  void append(const Epoch& epoch);  // shape must match the store geometry

  std::size_t n_epochs() const { return kinds_.size(); }
  std::size_t n_channels() const { return channels_.size(); }
  std::size_t n_samples() const { return n_samples_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  const std::vector<std::string>& channels() const { return channels_; }

  Epoch epoch(std::size_t i) const;
  const float* epoch_data(std::size_t i) const;
  std::optional<Label> label(std::size_t i) const { return labels_[i]; }
  const std::string& subject(std::size_t i) const { return subjects_[i]; }
  EpochKind kind(std::size_t i) const { return kinds_[i]; }
  const std::vector<float>& payload() const { return payload_; }

  bool all_labeled() const;
  std::vector<std::string> distinct_subjects() const;

 private:
  double sample_rate_hz_ = 0.0;
  std::vector<std::string> channels_;
  std::size_t n_samples_ = 0;
  std::vector<float> payload_;
  std::vector<std::optional<Label>> labels_;
  std::vector<std::string> subjects_;
  std::vector<EpochKind> kinds_;
};

EpochStore make_store(double sample_rate_hz, std::vector<std::string> channels,
                      std::size_t n_samples, const std::vector<Epoch>& epochs);

// On-disk layout: <dir>/manifest.json plus <dir>/epochs.f32 (little-endian
// float32). Round-trips bit-exactly.
void save_store(const EpochStore& store, const std::filesystem::path& dir);
EpochStore load_store(const std::filesystem::path& dir);

// Deterministic stratified split. Strata are (label, subject) pairs so the
// validation set draws from every subject; per-stratum counts deviate from
// the exact fraction by at most one epoch. Requires all epochs labeled.
std::pair<EpochStore, EpochStore> split_train_val(const EpochStore& store,
                                                  double val_fraction,
                                                  std::uint64_t seed);

}  // namespace misynth
