#include "misynth/edf.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "misynth/errors.hpp"

namespace misynth {

namespace {

std::string trimmed(std::span<const unsigned char> bytes, std::size_t offset, std::size_t len) {
  std::string s(reinterpret_cast<const char*>(bytes.data()) + offset, len);
  const auto first = s.find_first_not_of(" \0\r\n\t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \0\r\n\t");
  return s.substr(first, last - first + 1);
}

long parse_int_field(std::span<const unsigned char> bytes, std::size_t offset,
                     std::size_t len, const std::string& field) {
  const std::string s = trimmed(bytes, offset, len);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw InputError("edf: field '" + field + "' is not an integer: '" + s + "'");
  }
  return value;
}

double parse_double_field(std::span<const unsigned char> bytes, std::size_t offset,
                          std::size_t len, const std::string& field) {
  const std::string s = trimmed(bytes, offset, len);
  if (s.empty()) {
    throw InputError("edf: field '" + field + "' is empty");
  }
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InputError("edf: field '" + field + "' is not numeric: '" + s + "'");
  }
  if (pos != s.size()) {
    throw InputError("edf: field '" + field + "' has trailing junk: '" + s + "'");
  }
  return value;
}

constexpr std::size_t kMainHeaderBytes = 256;
constexpr std::size_t kPerSignalHeaderBytes = 256;

}  // namespace

Recording read_edf(std::span<const unsigned char> bytes) {
  if (bytes.size() < kMainHeaderBytes) {
    throw InputError("edf: file shorter than the 256-byte header");
  }

  const std::string version = trimmed(bytes, 0, 8);
  if (version != "0") {
    throw InputError("edf: field 'version' must be '0', got '" + version + "'");
  }
  const std::string patient = trimmed(bytes, 8, 80);
  const long header_bytes = parse_int_field(bytes, 184, 8, "header_bytes");
  const long n_records = parse_int_field(bytes, 236, 8, "n_records");
  const double record_duration_s = parse_double_field(bytes, 244, 8, "record_duration");
  const long n_signals = parse_int_field(bytes, 252, 4, "n_signals");

  if (n_signals <= 0) {
    throw InputError("edf: field 'n_signals' must be positive");
  }
  if (n_records < 0) {
    throw InputError("edf: field 'n_records' is negative (unknown record count unsupported)");
  }
  if (record_duration_s <= 0.0) {
    throw InputError("edf: field 'record_duration' must be positive");
  }
  const std::size_t ns = static_cast<std::size_t>(n_signals);
  const std::size_t expected_header = kMainHeaderBytes + ns * kPerSignalHeaderBytes;
  if (static_cast<std::size_t>(header_bytes) != expected_header) {
    throw InputError("edf: field 'header_bytes' inconsistent with signal count");
  }
  if (bytes.size() < expected_header) {
    throw InputError("edf: truncated signal headers");
  }

  // Per-signal header arrays, laid out field-major after the main header.
  struct SignalInfo {
    std::string label;
    double phys_min = 0, phys_max = 0;
    long dig_min = 0, dig_max = 0;
    long samples_per_record = 0;
    bool annotation = false;
  };
  std::vector<SignalInfo> sig(ns);
  std::size_t off = kMainHeaderBytes;
  for (std::size_t s = 0; s < ns; ++s) {
    sig[s].label = trimmed(bytes, off + s * 16, 16);
    sig[s].annotation = sig[s].label == "EDF Annotations";
  }
  off += ns * 16;   // labels
  off += ns * 80;   // transducer type
  off += ns * 8;    // physical dimension
  for (std::size_t s = 0; s < ns; ++s)
    sig[s].phys_min = parse_double_field(bytes, off + s * 8, 8, "physical_min[" + std::to_string(s) + "]");
  off += ns * 8;
  for (std::size_t s = 0; s < ns; ++s)
    sig[s].phys_max = parse_double_field(bytes, off + s * 8, 8, "physical_max[" + std::to_string(s) + "]");
  off += ns * 8;
  for (std::size_t s = 0; s < ns; ++s)
    sig[s].dig_min = parse_int_field(bytes, off + s * 8, 8, "digital_min[" + std::to_string(s) + "]");
  off += ns * 8;
  for (std::size_t s = 0; s < ns; ++s)
    sig[s].dig_max = parse_int_field(bytes, off + s * 8, 8, "digital_max[" + std::to_string(s) + "]");
  off += ns * 8;
  off += ns * 80;   // prefiltering
  for (std::size_t s = 0; s < ns; ++s)
    sig[s].samples_per_record = parse_int_field(bytes, off + s * 8, 8, "samples_per_record[" + std::to_string(s) + "]");

  long data_spr = -1;
  for (std::size_t s = 0; s < ns; ++s) {
    if (sig[s].samples_per_record <= 0) {
      throw InputError("edf: field 'samples_per_record' must be positive for signal " + std::to_string(s));
    }
    if (sig[s].annotation) continue;
    if (sig[s].dig_max == sig[s].dig_min) {
      throw InputError("edf: field 'digital_min/max' degenerate for signal '" + sig[s].label + "'");
    }
    if (data_spr < 0) {
      data_spr = sig[s].samples_per_record;
    } else if (sig[s].samples_per_record != data_spr) {
      throw InputError("edf: mixed sampling rates across signals are unsupported");
    }
  }
  if (data_spr < 0) {
    throw InputError("edf: no data signals (annotations only)");
  }

  std::size_t record_bytes = 0;
  for (const auto& s : sig) record_bytes += static_cast<std::size_t>(s.samples_per_record) * 2;
  const std::size_t need = expected_header + static_cast<std::size_t>(n_records) * record_bytes;
  if (bytes.size() < need) {
    throw InputError("edf: data section truncated (expected " + std::to_string(need) +
                     " bytes, have " + std::to_string(bytes.size()) + ")");
  }

  Recording rec;
  rec.sample_rate_hz = static_cast<double>(data_spr) / record_duration_s;
  rec.subject_id = patient;
  const std::size_t total = static_cast<std::size_t>(n_records) * static_cast<std::size_t>(data_spr);
  for (std::size_t s = 0; s < ns; ++s) {
    if (sig[s].annotation) continue;
    rec.channels.push_back(sig[s].label);
    rec.samples.emplace_back();
    rec.samples.back().reserve(total);
  }

  const unsigned char* p = bytes.data() + expected_header;
  for (long r = 0; r < n_records; ++r) {
    std::size_t ch = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      const long spr = sig[s].samples_per_record;
      if (sig[s].annotation) {
        p += spr * 2;
        continue;
      }
      const double dig_span = static_cast<double>(sig[s].dig_max - sig[s].dig_min);
      auto& dst = rec.samples[ch];
      for (long i = 0; i < spr; ++i) {
        const std::int16_t digital =
            static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                      (static_cast<std::uint16_t>(p[1]) << 8));
        // Interpolation form keeps dig_min -> phys_min and dig_max -> phys_max
        // exact in floating point.
        const double t = (static_cast<double>(digital) - static_cast<double>(sig[s].dig_min)) / dig_span;
        dst.push_back(sig[s].phys_min * (1.0 - t) + sig[s].phys_max * t);
        p += 2;
      }
      ++ch;
    }
  }
  rec.validate();
  return rec;
}

Recording read_edf(std::istream& in) {
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return read_edf(std::span<const unsigned char>(bytes));
}

Recording read_edf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("edf: cannot open '" + path + "'");
  }
  return read_edf(in);
}

}  // namespace misynth
