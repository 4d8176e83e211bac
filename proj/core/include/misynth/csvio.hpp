#pragma once

#include <istream>
#include <string>
#include <vector>

#include "misynth/recording.hpp"

namespace misynth {

// Plain-text recording: first row channel names, each following row one
// sample per channel. An empty body yields a zero-length Recording.
Recording read_csv_recording(std::istream& in, double sample_rate_hz);
Recording read_csv_recording_file(const std::string& path, double sample_rate_hz);

struct CueEvent {
  double onset_s = 0.0;
  std::string label;  // RIGHT / LEFT / FEET
};

// Events sidecar: "onset_seconds,label" rows, optional header line.
std::vector<CueEvent> read_events_csv(std::istream& in);
std::vector<CueEvent> read_events_csv_file(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace misynth
