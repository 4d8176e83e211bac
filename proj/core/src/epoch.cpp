#include "misynth/epoch.hpp"

#include <cmath>

#include "misynth/errors.hpp"

namespace misynth {

std::string to_string(Label label) {
  switch (label) {
    case Label::Right: return "RIGHT";
    case Label::Left: return "LEFT";
    case Label::Feet: return "FEET";
  }
  return "?";
}

Label label_from_string(const std::string& name) {
  if (name == "RIGHT") return Label::Right;
  if (name == "LEFT") return Label::Left;
  if (name == "FEET") return Label::Feet;
  throw InputError("unknown class label '" + name + "' (expected RIGHT, LEFT or FEET)");
}

ConditionVector ConditionVector::from_label(Label label) {
  ConditionVector c;
  c.entries[static_cast<std::size_t>(label)] = 1.0;
  return c;
}

void ConditionVector::validate() const {
  std::size_t ones = 0;
  for (const double v : entries) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw InputError("condition vector must be one-hot (entries 0 or 1)");
    }
  }
  if (ones != 1) {
    throw InputError("condition vector must have exactly one entry set to 1");
  }
}

Label ConditionVector::label() const {
  validate();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i] == 1.0) return static_cast<Label>(i);
  }
  throw InputError("condition vector has no active entry");
}

void Epoch::validate() const {
  if (data.size() != n_channels * n_samples) {
    throw InputError("epoch: data size does not match declared shape");
  }
  if (label.has_value() != (kind == EpochKind::CueAligned)) {
    throw InputError("epoch: label must be present exactly for cue-aligned epochs");
  }
}

namespace {

// Converts a duration to an exact sample count, rejecting non-integer results.
std::size_t exact_samples(double seconds, double fs_hz, const char* what) {
  const double raw = seconds * fs_hz;
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) > 1e-6 || rounded <= 0.0) {
    throw InputError(std::string("epoching: ") + what + " of " + std::to_string(seconds) +
                     " s is not an integer number of samples at " + std::to_string(fs_hz) + " Hz");
  }
  return static_cast<std::size_t>(rounded);
}

Epoch cut(const Recording& rec, std::size_t start, std::size_t len) {
  Epoch e;
  e.n_channels = rec.n_channels();
  e.n_samples = len;
  e.subject_id = rec.subject_id;
  e.data.resize(e.n_channels * len);
  for (std::size_t ch = 0; ch < e.n_channels; ++ch) {
    const auto& src = rec.samples[ch];
    for (std::size_t t = 0; t < len; ++t) {
      e.data[ch * len + t] = static_cast<float>(src[start + t]);
    }
  }
  return e;
}

}  // namespace

std::vector<Epoch> extract_cue_epochs(const Recording& rec,
                                      const std::vector<double>& cue_times_s,
                                      Label label) {
  rec.validate();
  const double fs = rec.sample_rate_hz;
  const std::size_t pre = exact_samples(kPreCueSeconds, fs, "pre-cue window");
  const std::size_t post = exact_samples(kPostCueSeconds, fs, "post-cue window");
  const long long n = static_cast<long long>(rec.n_samples());

  std::string bad;
  for (std::size_t i = 0; i < cue_times_s.size(); ++i) {
    const long long cue = std::llround(cue_times_s[i] * fs);
    if (cue - static_cast<long long>(pre) < 0 || cue + static_cast<long long>(post) > n) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(i);
    }
  }
  if (!bad.empty()) {
    throw InputError("extract_cue_epochs: cue window [-" + std::to_string(kPreCueSeconds) +
                     ", +" + std::to_string(kPostCueSeconds) +
                     ") s out of recording bounds for cue index(es): " + bad);
  }

  std::vector<Epoch> epochs;
  epochs.reserve(cue_times_s.size());
  for (const double t : cue_times_s) {
    const long long cue = std::llround(t * fs);
    Epoch e = cut(rec, static_cast<std::size_t>(cue - static_cast<long long>(pre)), pre + post);
    e.label = label;
    e.kind = EpochKind::CueAligned;
    epochs.push_back(std::move(e));
  }
  return epochs;
}

std::vector<Epoch> extract_resting_epochs(const Recording& rec) {
  rec.validate();
  const double fs = rec.sample_rate_hz;
  if (rec.duration_s() < 60.0 - 1e-9) {
    throw InputError("extract_resting_epochs: recording is " + std::to_string(rec.duration_s()) +
                     " s, need at least 60 s");
  }
  const std::size_t skip = exact_samples(5.0, fs, "discard margin");
  const std::size_t seg = exact_samples(2.5, fs, "resting segment");
  constexpr std::size_t kSegments = 20;

  std::vector<Epoch> epochs;
  epochs.reserve(kSegments);
  for (std::size_t i = 0; i < kSegments; ++i) {
    Epoch e = cut(rec, skip + i * seg, seg);
    e.kind = EpochKind::Resting;
    epochs.push_back(std::move(e));
  }
  return epochs;
}

}  // namespace misynth
