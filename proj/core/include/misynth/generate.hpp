#pragma once

#include <array>
#include <cstdint>
#include <ostream>

#include "misynth/cvae.hpp"
#include "misynth/store.hpp"

namespace misynth {

// Where each artificial epoch came from.
struct GenerationProvenance {
  std::size_t index = 0;         // position in the output store
  std::size_t source_index = 0;  // resting epoch it was derived from
  std::string subject;
  Label condition = Label::Right;
  std::uint64_t seed = 0;
};

struct ArtificialEpochSet {
  Label condition = Label::Right;
  std::uint64_t seed = 0;
  std::size_t samples_per_epoch = 1;
  EpochStore store;
  std::vector<GenerationProvenance> provenance;
};

// Resting epochs through the trained model: encode, sample z by
// reparameterization (fresh noise per requested sample), decode with the
// target condition. Batch norm runs in inference mode. latent_mean_mode is a
// diagnostic that decodes z = mu instead of sampling.
ArtificialEpochSet generate_conditioned(CvaeModel<float>& model, const EpochStore& resting,
                                        Label condition, std::size_t samples_per_epoch,
                                        std::uint64_t seed, bool latent_mean_mode = false);

// All three conditions with the noise draw shared per source epoch, so any
// difference between the returned sets is attributable to the condition
// vector alone.
std::array<ArtificialEpochSet, kNumClasses> generate_all_conditions(CvaeModel<float>& model,
                                                                    const EpochStore& resting,
                                                                    std::uint64_t seed,
                                                                    std::size_t samples_per_epoch = 1);

void write_provenance_csv(const ArtificialEpochSet& set, std::ostream& out);

}  // namespace misynth
