#pragma once

#include <cstdint>
#include <ostream>

#include "misynth/generate.hpp"
#include "misynth/store.hpp"

namespace misynth {

// One class's injected spectro-temporal signature: a band-limited oscillation
// on the target channels whose amplitude drops to amplitude_ratio at the cue.
struct ClassModulation {
  Label label = Label::Right;
  double center_hz = 10.0;
  std::vector<std::string> channels;
  double amplitude_ratio = 0.4;  // post/pre, in (0,1]
  double amplitude = 0.7;        // pre-cue oscillation amplitude
};

struct SynthSpec {
  std::size_t n_subjects = 5;
  std::size_t trials_per_class = 20;
  std::size_t resting_per_subject = 20;
  double sample_rate_hz = 160.0;
  std::vector<std::string> channels;      // defaults to sensorimotor_channels()
  std::vector<ClassModulation> modulations;  // defaults to default_modulations()
  // Background: AR(1)-shaped noise (1/f-like rolloff) plus a white floor.
  // Scales sit well inside the decoder's ELU output range (> -1).
  double pink_noise_std = 0.08;
  double white_noise_std = 0.03;
  double subject_scale_min = 0.85;  // per-subject amplitude factor range
  double subject_scale_max = 1.15;
  double trial_jitter = 0.1;  // relative per-trial amplitude jitter
  std::uint64_t seed = 7;

  void validate() const;
};

// Beta over the left hemisphere for RIGHT, alpha over the right hemisphere
// for LEFT, alpha at the vertex for FEET.
std::vector<ClassModulation> default_modulations();

struct SynthTruthRow {
  std::size_t trial_index = 0;
  std::string subject;
  Label label = Label::Right;
  double center_hz = 0.0;
  double amplitude_ratio = 1.0;
  double amplitude = 0.0;
};

struct SynthDataset {
  EpochStore cue_store;      // labeled trials, oscillation drop at the cue sample
  EpochStore resting_store;  // background noise only
  std::vector<SynthTruthRow> truth;
};

SynthDataset make_synthetic_dataset(const SynthSpec& spec);

void write_truth_csv(const SynthDataset& dataset, std::ostream& out);

struct SeparabilityReport {
  double accuracy = 0.0;
  std::size_t degenerate_features = 0;  // zero-variance columns (reported, not fatal)
};

// Linear decodability of the three condition sets: per-channel alpha/beta
// bandpower changes over [0.5, 1.5] s as features (2 x n_channels), ridge
// one-vs-rest with stratified 5-fold cross-validation. Deterministic given
// the seed. Requires >= 10 epochs per condition.
SeparabilityReport evaluate_separability_report(const std::array<ArtificialEpochSet, kNumClasses>& sets,
                                                std::uint64_t seed);
double evaluate_separability(const std::array<ArtificialEpochSet, kNumClasses>& sets,
                             std::uint64_t seed = 0);

// The feature extraction used by the scorer, exposed for analysis/tests:
// [alpha_change(ch0), beta_change(ch0), alpha_change(ch1), ...].
std::vector<double> bandpower_features(const Epoch& epoch, double sample_rate_hz);

}  // namespace misynth
