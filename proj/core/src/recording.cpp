#include "misynth/recording.hpp"

#include <unordered_map>
#include <unordered_set>

#include "misynth/errors.hpp"

namespace misynth {

void Recording::validate() const {
  if (sample_rate_hz <= 0.0) {
    throw InputError("recording: sample rate must be positive");
  }
  if (channels.size() != samples.size()) {
    throw InputError("recording: channel name count does not match signal count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : channels) {
    if (!seen.insert(name).second) {
      throw InputError("recording: duplicate channel name '" + name + "'");
    }
  }
  for (std::size_t c = 1; c < samples.size(); ++c) {
    if (samples[c].size() != samples[0].size()) {
      throw InputError("recording: channel '" + channels[c] +
                       "' has a different sample count than '" + channels[0] + "'");
    }
  }
}

Recording select_channels(const Recording& rec, const std::vector<std::string>& names) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < rec.channels.size(); ++c) {
    index.emplace(rec.channels[c], c);
  }
  Recording out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.subject_id = rec.subject_id;
  out.channels.reserve(names.size());
  out.samples.reserve(names.size());
  for (const auto& name : names) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw InputError("select_channels: channel '" + name + "' not present in recording");
    }
    out.channels.push_back(name);
    out.samples.push_back(rec.samples[it->second]);
  }
  return out;
}

const std::vector<std::string>& sensorimotor_channels() {
  static const std::vector<std::string> kNames = {
      "FC3", "FC1", "FCZ", "FC2", "FC4",
      "C3",  "C1",  "CZ",  "C2",  "C4",
      "CP3", "CP1", "CPZ", "CP2", "CP4",
  };
  return kNames;
}

}  // namespace misynth
