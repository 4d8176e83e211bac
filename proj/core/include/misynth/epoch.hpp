#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "misynth/recording.hpp"

namespace misynth {

// Motor imagery class conditions. Order fixes the one-hot layout:
// RIGHT = [1,0,0], LEFT = [0,1,0], FEET = [0,0,1].
enum class Label { Right = 0, Left = 1, Feet = 2 };

constexpr std::size_t kNumClasses = 3;

std::string to_string(Label label);
Label label_from_string(const std::string& name);  // throws InputError on unknown name

// One-hot condition vector over the three classes.
struct ConditionVector {
  std::array<double, kNumClasses> entries{};

  static ConditionVector from_label(Label label);
  // Throws InputError unless exactly one entry is 1 and the rest 0.
  void validate() const;
  Label label() const;
};

enum class EpochKind { CueAligned, Resting };

// One trial: n_channels x n_samples amplitude matrix. Cue-aligned epochs
// carry a class label, resting epochs do not.
struct Epoch {
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<float> data;  // row-major [channel][sample]
  std::optional<Label> label;
  std::string subject_id;
  EpochKind kind = EpochKind::CueAligned;

  float& at(std::size_t ch, std::size_t t) { return data[ch * n_samples + t]; }
  float at(std::size_t ch, std::size_t t) const { return data[ch * n_samples + t]; }

  void validate() const;  // shape and label/kind consistency
};

// Epoch geometry at 160 Hz: [-0.5 s, +2.0 s) around the cue, 400 samples,
// cue at sample index 80. Other rates scale the window; non-integer sample
// counts are rejected.
constexpr double kPreCueSeconds = 0.5;
constexpr double kPostCueSeconds = 2.0;
constexpr double kEpochSeconds = kPreCueSeconds + kPostCueSeconds;

std::vector<Epoch> extract_cue_epochs(const Recording& rec,
                                      const std::vector<double>& cue_times_s,
                                      Label label);

// One-minute eyes-open protocol: drop the first and last 5 s, cut the middle
// 50 s into twenty non-overlapping 2.5 s segments. Recordings longer than
// 60 s use their first minute.
std::vector<Epoch> extract_resting_epochs(const Recording& rec);

}  // namespace misynth
