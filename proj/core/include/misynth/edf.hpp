#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>

#include "misynth/recording.hpp"

namespace misynth {

// Minimal EDF reader: fixed-rate signals, 16-bit samples, per-signal linear
// digital-to-physical scaling. Signals labelled "EDF Annotations" are skipped
// so EDF+ files remain readable; annotation payloads are never decoded.
// All remaining signals must share one sampling rate.
Recording read_edf(std::span<const unsigned char> bytes);
Recording read_edf(std::istream& in);
Recording read_edf_file(const std::string& path);

}  // namespace misynth
