#pragma once

#include "misynth/epoch.hpp"
#include "misynth/recording.hpp"

namespace misynth {

// Common average reference: subtract the instantaneous mean across channels
// at every sample. Requires at least two channels. Idempotent.
Recording common_average_reference(const Recording& rec);
Epoch common_average_reference(const Epoch& epoch);

}  // namespace misynth
