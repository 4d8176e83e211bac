#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

#include "misynth/epoch.hpp"
#include "misynth/recording.hpp"
#include "misynth/rng.hpp"

namespace misynth::test {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("misynth_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline Recording make_recording(std::size_t n_channels, std::size_t n_samples, double fs,
                                std::uint64_t seed = 1) {
  Recording rec;
  rec.sample_rate_hz = fs;
  rec.subject_id = "T01";
  Rng rng(seed);
  for (std::size_t c = 0; c < n_channels; ++c) {
    rec.channels.push_back("CH" + std::to_string(c));
    rec.samples.emplace_back();
    for (std::size_t t = 0; t < n_samples; ++t) rec.samples.back().push_back(rng.normal());
  }
  return rec;
}

inline Epoch make_epoch(std::size_t n_channels, std::size_t n_samples, std::uint64_t seed,
                        std::optional<Label> label = std::nullopt) {
  Epoch e;
  e.n_channels = n_channels;
  e.n_samples = n_samples;
  e.subject_id = "T01";
  e.kind = label ? EpochKind::CueAligned : EpochKind::Resting;
  e.label = label;
  Rng rng(seed);
  e.data.resize(n_channels * n_samples);
  for (auto& v : e.data) v = static_cast<float>(rng.normal());
  return e;
}

// Single-channel epoch holding a sinusoid whose amplitude changes at the cue
// sample, with an optional white floor.
inline Epoch make_sine_epoch(double freq_hz, double amp_pre, double amp_post, double noise_std,
                             Rng& rng, std::size_t cue_sample = 80, std::size_t n_samples = 400,
                             double fs = 160.0) {
  Epoch e;
  e.n_channels = 1;
  e.n_samples = n_samples;
  e.kind = EpochKind::Resting;
  e.data.resize(n_samples);
  for (std::size_t t = 0; t < n_samples; ++t) {
    const double amp = t < cue_sample ? amp_pre : amp_post;
    double v = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / fs);
    if (noise_std > 0.0) v += rng.normal(0.0, noise_std);
    e.data[t] = static_cast<float>(v);
  }
  return e;
}

}  // namespace misynth::test
