#include "misynth/csvio.hpp"

#include <charconv>
#include <fstream>

#include "misynth/errors.hpp"

namespace misynth {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

namespace {

std::string strip(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = strip(s);
  if (t.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(t, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == t.size();
}

}  // namespace

Recording read_csv_recording(std::istream& in, double sample_rate_hz) {
  if (sample_rate_hz <= 0.0) {
    throw InputError("csv recording: sample rate must be positive");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("csv recording: missing header row");
  }
  Recording rec;
  rec.sample_rate_hz = sample_rate_hz;
  for (const auto& name : split_csv_line(line)) {
    rec.channels.push_back(strip(name));
  }
  rec.samples.assign(rec.channels.size(), {});

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != rec.channels.size()) {
      throw InputError("csv recording: row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(rec.channels.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw InputError("csv recording: row " + std::to_string(row) + ", column '" +
                         rec.channels[c] + "': not numeric: '" + fields[c] + "'");
      }
      rec.samples[c].push_back(v);
    }
  }
  rec.validate();
  return rec;
}

Recording read_csv_recording_file(const std::string& path, double sample_rate_hz) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("csv recording: cannot open '" + path + "'");
  }
  return read_csv_recording(in, sample_rate_hz);
}

std::vector<CueEvent> read_events_csv(std::istream& in) {
  std::vector<CueEvent> events;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) {
      throw InputError("events csv: row " + std::to_string(row) +
                       " must have exactly 2 fields (onset_seconds,label)");
    }
    double onset = 0.0;
    if (!parse_double(fields[0], onset)) {
      if (row == 1) continue;  // header line
      throw InputError("events csv: row " + std::to_string(row) +
                       ": onset is not numeric: '" + fields[0] + "'");
    }
    events.push_back({onset, strip(fields[1])});
  }
  return events;
}

std::vector<CueEvent> read_events_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("events csv: cannot open '" + path + "'");
  }
  return read_events_csv(in);
}

}  // namespace misynth
