#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "misynth/dpss.hpp"
#include "misynth/epoch.hpp"

namespace misynth {

// Frequency-by-frame grid shared by raw power and ERD/ERS maps.
// values is row-major by frequency bin.
struct TimeFreqGrid {
  std::vector<double> freqs_hz;       // strictly increasing, 1 Hz bins
  std::vector<double> frame_times_s;  // window-center times relative to the cue
  std::vector<double> values;          // freqs x frames

  std::size_t n_freqs() const { return freqs_hz.size(); }
  std::size_t n_frames() const { return frame_times_s.size(); }
  double& at(std::size_t f, std::size_t t) { return values[f * n_frames() + t]; }
  double at(std::size_t f, std::size_t t) const { return values[f * n_frames() + t]; }
  bool same_grid(const TimeFreqGrid& other) const;
};

// Signed percent power change relative to a pre-cue baseline, per electrode.
// Bins whose baseline power is zero are flagged and hold NaN.
struct TfrMap : TimeFreqGrid {
  std::string electrode;
  std::vector<std::size_t> flagged_bins;
};

struct SpectrogramParams {
  double window_s = 0.5;
  double step_s = 0.05;
  double fmin_hz = 4.0;
  double fmax_hz = 30.0;
  double epoch_start_s = -0.5;  // time of the first sample relative to the cue
};

// Multitaper power: slide the window by step_s, remove each segment's mean,
// taper, and average squared DFT magnitudes over tapers. The 1 Hz bin grid
// comes from evaluating the DFT of the zero-padded segment (pad length =
// round(fs) samples) at integer frequencies in [fmin, fmax].
std::vector<TimeFreqGrid> multitaper_spectrogram(const Epoch& epoch, const TaperSet& tapers,
                                                 const SpectrogramParams& params,
                                                 double sample_rate_hz);

// Percent change against the mean power over baseline frames, per 1 Hz bin.
TfrMap erd_ers(const TimeFreqGrid& power, double baseline_start_s, double baseline_end_s,
               const std::string& electrode);

TfrMap average_tfr(const std::vector<TfrMap>& maps);

// Mean map value over bins in [f0,f1] and frames with centers in [t0,t1],
// all bounds inclusive. Flagged (NaN) bins are skipped.
double bandpower_change(const TfrMap& map, double f0_hz, double f1_hz, double t0_s, double t1_s);

// Alpha and beta bands as used throughout the analysis.
constexpr double kAlphaLowHz = 8.0, kAlphaHighHz = 15.0;
constexpr double kBetaLowHz = 20.0, kBetaHighHz = 30.0;

// CSV grid: metadata comment, then first row frame times, first column
// frequencies.
void write_tfr_csv(const TfrMap& map, const TaperSet& tapers, const SpectrogramParams& params,
                   std::ostream& out);

}  // namespace misynth
