#pragma once

#include <string>
#include <vector>

namespace misynth {

// Continuous multichannel signal as ingested from disk, before any
// channel selection or epoching. Amplitudes are physical units (microvolts).
struct Recording {
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;
  std::vector<std::vector<double>> samples;  // [channel][sample], equal lengths
  std::string subject_id;

  std::size_t n_channels() const { return channels.size(); }
  std::size_t n_samples() const {
    return samples.empty() ? 0 : samples.front().size();
  }
  double duration_s() const {
    return sample_rate_hz > 0.0 ? static_cast<double>(n_samples()) / sample_rate_hz : 0.0;
  }

  // Throws InputError if channel names are not unique, lengths differ, or the
  // sample rate is not positive.
  void validate() const;
};

// Restrict to the named channels, in the requested order. Unknown names throw
// InputError naming the first missing channel.
Recording select_channels(const Recording& rec, const std::vector<std::string>& names);

// The 15 electrodes forming a 3x5 rectangle around Cz (frontocentral,
// central and centroparietal rows of the 10-10 montage).
const std::vector<std::string>& sensorimotor_channels();

}  // namespace misynth
