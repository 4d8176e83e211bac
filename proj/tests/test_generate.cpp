#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "misynth/errors.hpp"
#include "misynth/generate.hpp"
#include "misynth/synthbench.hpp"
#include "misynth/train.hpp"

using namespace misynth;
using namespace misynth::test;

namespace {

EpochStore small_resting_store(std::size_t n, std::uint64_t seed) {
  EpochStore store(160.0, sensorimotor_channels(), 400);
  for (std::size_t i = 0; i < n; ++i) {
    Epoch e = make_epoch(15, 400, seed + i);
    for (auto& v : e.data) v *= 0.3f;
    e.subject_id = "S" + std::to_string(i % 3);
    store.append(e);
  }
  return store;
}

CvaeModel<float> ready_model(std::uint64_t seed) {
  CvaeModel<float> model(CvaeConfig{}, seed);
  model.init_running_stats();
  return model;
}

}  // namespace

TEST_SUITE("generate") {

TEST_CASE("generation is deterministic and fully traced") {
  CvaeModel<float> model = ready_model(15);
  const EpochStore resting = small_resting_store(12, 40);

  const ArtificialEpochSet a = generate_conditioned(model, resting, Label::Left, 1, 99);
  const ArtificialEpochSet b = generate_conditioned(model, resting, Label::Left, 1, 99);
  CHECK(a.store.n_epochs() == 12);
  CHECK(a.store.payload() == b.store.payload());

  REQUIRE(a.provenance.size() == a.store.n_epochs());
  for (std::size_t i = 0; i < a.provenance.size(); ++i) {
    const auto& p = a.provenance[i];
    CHECK(p.index == i);
    CHECK(p.source_index < resting.n_epochs());
    CHECK(p.subject == resting.subject(p.source_index));
    CHECK(p.condition == Label::Left);
    CHECK(p.seed == 99);
  }
  for (std::size_t i = 0; i < a.store.n_epochs(); ++i) {
    CHECK(a.store.label(i) == Label::Left);
    CHECK(a.store.kind(i) == EpochKind::CueAligned);
  }

  const ArtificialEpochSet c = generate_conditioned(model, resting, Label::Left, 1, 100);
  CHECK(c.store.payload() != a.store.payload());
}

TEST_CASE("samples_per_epoch multiplies the output with per-sample noise") {
  CvaeModel<float> model = ready_model(15);
  const EpochStore resting = small_resting_store(5, 41);
  const ArtificialEpochSet set = generate_conditioned(model, resting, Label::Feet, 3, 7);
  CHECK(set.store.n_epochs() == 15);
  // Consecutive samples of one source epoch differ through the noise draw.
  CHECK(std::memcmp(set.store.epoch_data(0), set.store.epoch_data(1), 15 * 400 * 4) != 0);
  CHECK(set.provenance[0].source_index == set.provenance[1].source_index);
  CHECK(set.provenance[3].source_index == 1);
}

TEST_CASE("all-conditions generation shares the noise draw across conditions") {
  CvaeModel<float> model = ready_model(16);
  const EpochStore resting = small_resting_store(8, 42);
  const auto sets = generate_all_conditions(model, resting, 1234);
  CHECK(sets[0].condition == Label::Right);
  CHECK(sets[1].condition == Label::Left);
  CHECK(sets[2].condition == Label::Feet);
  for (const auto& set : sets) CHECK(set.store.n_epochs() == resting.n_epochs());

  // With shared noise, each per-condition set equals the single-condition
  // run with the same seed, so differences between sets come from c alone.
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const ArtificialEpochSet solo =
        generate_conditioned(model, resting, static_cast<Label>(k), 1, 1234);
    CHECK(solo.store.payload() == sets[k].store.payload());
  }

  // The condition input matters: sets differ pairwise.
  double msd01 = 0, msd12 = 0;
  for (std::size_t i = 0; i < sets[0].store.payload().size(); ++i) {
    const double d01 = sets[0].store.payload()[i] - sets[1].store.payload()[i];
    const double d12 = sets[1].store.payload()[i] - sets[2].store.payload()[i];
    msd01 += d01 * d01;
    msd12 += d12 * d12;
  }
  CHECK(msd01 > 0.0);
  CHECK(msd12 > 0.0);
}

TEST_CASE("generated epochs are finite and correctly shaped") {
  CvaeModel<float> model = ready_model(17);
  const EpochStore resting = small_resting_store(6, 43);
  const auto sets = generate_all_conditions(model, resting, 5);
  for (const auto& set : sets) {
    CHECK(set.store.n_channels() == 15);
    CHECK(set.store.n_samples() == 400);
    for (const float v : set.store.payload()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("latent mean mode is deterministic across seeds") {
  CvaeModel<float> model = ready_model(18);
  const EpochStore resting = small_resting_store(4, 44);
  const auto a = generate_conditioned(model, resting, Label::Right, 1, 1, true);
  const auto b = generate_conditioned(model, resting, Label::Right, 1, 12345, true);
  CHECK(a.store.payload() == b.store.payload());  // z = mu ignores the noise seed
}

TEST_CASE("generation validates its inputs") {
  CvaeModel<float> uninit(CvaeConfig{}, 19);  // running stats never initialized
  const EpochStore resting = small_resting_store(4, 45);
  CHECK_THROWS_AS(generate_conditioned(uninit, resting, Label::Left, 1, 1), InputError);

  CvaeModel<float> model = ready_model(19);
  EpochStore empty(160.0, sensorimotor_channels(), 400);
  CHECK_THROWS_AS(generate_conditioned(model, empty, Label::Left, 1, 1), InputError);
  CHECK_THROWS_AS(generate_conditioned(model, resting, Label::Left, 0, 1), InputError);

  EpochStore wrong(160.0, {"A", "B"}, 400);
  wrong.append(make_epoch(2, 400, 1));
  CHECK_THROWS_AS(generate_conditioned(model, wrong, Label::Left, 1, 1), InputError);
}

}  // TEST_SUITE("generate")
