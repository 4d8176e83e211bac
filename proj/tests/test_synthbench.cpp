#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "misynth/errors.hpp"
#include "misynth/synthbench.hpp"
#include "misynth/tfr.hpp"

using namespace misynth;
using namespace misynth::test;

namespace {

// Averaged ERD at one channel/bin across a store's epochs.
double mean_erd_at(const EpochStore& store, std::size_t channel, double hz, double f1 = -1.0) {
  const TaperSet tapers = dpss(80, 1.5, 2);
  const SpectrogramParams params;
  std::vector<TfrMap> maps;
  for (std::size_t i = 0; i < store.n_epochs(); ++i) {
    const auto grids = multitaper_spectrogram(store.epoch(i), tapers, params, 160.0);
    maps.push_back(erd_ers(grids[channel], -0.5, 0.0, "ch"));
  }
  const TfrMap avg = average_tfr(maps);
  return bandpower_change(avg, hz, f1 < 0 ? hz : f1, 0.5, 1.5);
}

// Wraps class-sliced stores as generation outputs for the scorer.
std::array<ArtificialEpochSet, 3> sets_from_store(const EpochStore& store) {
  std::array<ArtificialEpochSet, 3> sets;
  for (std::size_t k = 0; k < 3; ++k) {
    sets[k].condition = static_cast<Label>(k);
    sets[k].store = EpochStore(store.sample_rate_hz(), store.channels(), store.n_samples());
  }
  for (std::size_t i = 0; i < store.n_epochs(); ++i) {
    const Epoch e = store.epoch(i);
    sets[static_cast<std::size_t>(*e.label)].store.append(e);
  }
  return sets;
}

}  // namespace

TEST_SUITE("synthbench") {

TEST_CASE("synthetic dataset: counts, labels and determinism") {
  SynthSpec spec;
  spec.n_subjects = 5;
  spec.trials_per_class = 20;
  const SynthDataset a = make_synthetic_dataset(spec);
  CHECK(a.cue_store.n_epochs() == 300);
  CHECK(a.resting_store.n_epochs() == 100);
  CHECK(a.truth.size() == 300);
  CHECK(a.cue_store.all_labeled());
  CHECK(a.cue_store.distinct_subjects().size() == 5);
  for (std::size_t i = 0; i < a.resting_store.n_epochs(); ++i) {
    CHECK(a.resting_store.kind(i) == EpochKind::Resting);
    CHECK_FALSE(a.resting_store.label(i).has_value());
  }

  const SynthDataset b = make_synthetic_dataset(spec);
  CHECK(a.cue_store.payload() == b.cue_store.payload());
  CHECK(a.resting_store.payload() == b.resting_store.payload());

  SynthSpec other = spec;
  other.seed = spec.seed + 1;
  const SynthDataset c = make_synthetic_dataset(other);
  CHECK(a.cue_store.payload() != c.cue_store.payload());
}

TEST_CASE("synthetic dataset: ground truth mirrors the injected modulation") {
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.trials_per_class = 3;
  const SynthDataset data = make_synthetic_dataset(spec);
  REQUIRE(data.truth.size() == 18);
  for (std::size_t i = 0; i < data.truth.size(); ++i) {
    const auto& row = data.truth[i];
    CHECK(row.trial_index == i);
    CHECK(data.cue_store.label(i) == row.label);
    CHECK(data.cue_store.subject(i) == row.subject);
    const auto& mods = default_modulations();
    const auto it = std::find_if(mods.begin(), mods.end(),
                                 [&](const ClassModulation& m) { return m.label == row.label; });
    REQUIRE(it != mods.end());
    CHECK(row.center_hz == it->center_hz);
    CHECK(row.amplitude_ratio == it->amplitude_ratio);
    CHECK(row.amplitude > 0.0);
  }
}

TEST_CASE("synthetic dataset: amplitude ratio 0.5 reads near -75 percent at the target bin") {
  SynthSpec spec;
  spec.n_subjects = 1;
  spec.trials_per_class = 30;
  spec.resting_per_subject = 1;
  spec.subject_scale_min = spec.subject_scale_max = 1.0;
  spec.trial_jitter = 0.0;
  spec.pink_noise_std = 0.02;
  spec.white_noise_std = 0.01;
  spec.modulations = {
      {Label::Right, 10.0, {"CZ"}, 0.5, 0.8},
      {Label::Left, 10.0, {"C4"}, 0.5, 0.8},
      {Label::Feet, 10.0, {"C3"}, 0.5, 0.8},
  };
  const SynthDataset data = make_synthetic_dataset(spec);
  const auto sets = sets_from_store(data.cue_store);
  const std::size_t cz = 7;  // index in the sensorimotor layout
  const double erd = mean_erd_at(sets[0].store, cz, 10.0);
  CHECK(erd == doctest::Approx(-75.0).epsilon(12.0 / 75.0));
}

TEST_CASE("synthetic dataset: amplitude ratio 1.0 leaves the target bin flat") {
  SynthSpec spec;
  spec.n_subjects = 1;
  spec.trials_per_class = 30;
  spec.resting_per_subject = 1;
  spec.subject_scale_min = spec.subject_scale_max = 1.0;
  spec.trial_jitter = 0.0;
  spec.pink_noise_std = 0.02;
  spec.white_noise_std = 0.01;
  spec.modulations = {
      {Label::Right, 10.0, {"CZ"}, 1.0, 0.8},
      {Label::Left, 10.0, {"C4"}, 1.0, 0.8},
      {Label::Feet, 10.0, {"C3"}, 1.0, 0.8},
  };
  const SynthDataset data = make_synthetic_dataset(spec);
  const auto sets = sets_from_store(data.cue_store);
  CHECK(std::abs(mean_erd_at(sets[0].store, 7, 10.0)) < 10.0);
}

TEST_CASE("synthetic dataset: spec validation") {
  SynthSpec spec;
  spec.modulations = {{Label::Right, 10.0, {"CZ"}, 0.0, 0.8}};
  CHECK_THROWS_AS(make_synthetic_dataset(spec), InputError);
  spec.modulations = {{Label::Right, 55.0, {"CZ"}, 0.5, 0.8}};
  CHECK_THROWS_AS(make_synthetic_dataset(spec), InputError);
  spec.modulations = {{Label::Right, 10.0, {"NOPE"}, 0.5, 0.8}};
  CHECK_THROWS_AS(make_synthetic_dataset(spec), InputError);
}

TEST_CASE("bandpower features: one alpha and one beta value per channel") {
  Rng rng(3);
  const Epoch e = make_epoch(15, 400, 77);
  CHECK(bandpower_features(e, 160.0).size() == 30);
}

TEST_CASE("separability: identical sets score at chance") {
  SynthSpec spec;
  spec.n_subjects = 1;
  spec.trials_per_class = 12;
  spec.resting_per_subject = 1;
  const SynthDataset data = make_synthetic_dataset(spec);

  // Same epochs under all three condition labels: no signal to separate.
  std::array<ArtificialEpochSet, 3> sets;
  for (std::size_t k = 0; k < 3; ++k) {
    sets[k].condition = static_cast<Label>(k);
    sets[k].store = EpochStore(160.0, data.resting_store.channels(), 400);
    for (std::size_t i = 0; i < 12; ++i) {
      Epoch e = data.cue_store.epoch(i);
      e.label = static_cast<Label>(k);
      sets[k].store.append(e);
    }
  }
  const double acc = evaluate_separability(sets, 19);
  CHECK(std::abs(acc - 1.0 / 3.0) <= 0.1);
}

TEST_CASE("separability: disjoint strong single-channel patterns are fully separable") {
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.trials_per_class = 8;
  spec.resting_per_subject = 1;
  spec.pink_noise_std = 0.03;
  spec.white_noise_std = 0.02;
  spec.modulations = {
      {Label::Right, 24.0, {"C3"}, 0.3, 1.0},
      {Label::Left, 10.0, {"C4"}, 0.3, 0.8},
      {Label::Feet, 10.0, {"CZ"}, 0.3, 0.8},
  };
  const SynthDataset data = make_synthetic_dataset(spec);
  const auto sets = sets_from_store(data.cue_store);
  const auto report = evaluate_separability_report(sets, 4);
  CHECK(report.accuracy > 0.95);

  // Fewer than 10 epochs per condition is rejected.
  std::array<ArtificialEpochSet, 3> small;
  for (std::size_t k = 0; k < 3; ++k) {
    small[k].condition = static_cast<Label>(k);
    small[k].store = EpochStore(160.0, data.cue_store.channels(), 400);
    small[k].store.append(data.cue_store.epoch(k));
  }
  CHECK_THROWS_AS(evaluate_separability(small, 1), InputError);
}

TEST_CASE("separability: label shuffles stay near chance") {
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.trials_per_class = 6;
  spec.resting_per_subject = 1;
  spec.modulations = {
      {Label::Right, 24.0, {"C3"}, 0.3, 1.0},
      {Label::Left, 10.0, {"C4"}, 0.3, 0.8},
      {Label::Feet, 10.0, {"CZ"}, 0.3, 0.8},
  };
  const SynthDataset data = make_synthetic_dataset(spec);

  Rng rng(888);
  double mean_acc = 0.0;
  constexpr int kShuffles = 20;
  for (int s = 0; s < kShuffles; ++s) {
    std::vector<std::size_t> order(data.cue_store.n_epochs());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::array<ArtificialEpochSet, 3> sets;
    for (std::size_t k = 0; k < 3; ++k) {
      sets[k].condition = static_cast<Label>(k);
      sets[k].store = EpochStore(160.0, data.cue_store.channels(), 400);
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      Epoch e = data.cue_store.epoch(order[i]);
      const std::size_t k = i % 3;  // labels reassigned independently of content
      e.label = static_cast<Label>(k);
      sets[k].store.append(e);
    }
    mean_acc += evaluate_separability(sets, 1000 + static_cast<std::uint64_t>(s));
  }
  mean_acc /= kShuffles;
  CHECK(std::abs(mean_acc - 1.0 / 3.0) <= 0.1);
}

}  // TEST_SUITE("synthbench")
