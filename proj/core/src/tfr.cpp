#include "misynth/tfr.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>

#include "misynth/errors.hpp"

namespace misynth {

namespace {

std::size_t exact_window_samples(double seconds, double fs_hz, const char* what) {
  const double raw = seconds * fs_hz;
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) > 1e-6 || rounded <= 0.0) {
    throw InputError(std::string("spectrogram: ") + what +
                     " is not an integer number of samples at " + std::to_string(fs_hz) + " Hz");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

bool TimeFreqGrid::same_grid(const TimeFreqGrid& other) const {
  return freqs_hz == other.freqs_hz && frame_times_s == other.frame_times_s;
}

std::vector<TimeFreqGrid> multitaper_spectrogram(const Epoch& epoch, const TaperSet& tapers,
                                                 const SpectrogramParams& params,
                                                 double sample_rate_hz) {
  epoch.validate();
  if (sample_rate_hz <= 0.0) throw InputError("spectrogram: sample rate must be positive");
  const std::size_t win = exact_window_samples(params.window_s, sample_rate_hz, "window");
  const std::size_t step = exact_window_samples(params.step_s, sample_rate_hz, "step");
  if (win != tapers.window_len) {
    throw InputError("spectrogram: taper length " + std::to_string(tapers.window_len) +
                     " does not match window of " + std::to_string(win) + " samples");
  }
  if (win > epoch.n_samples) {
    throw InputError("spectrogram: window longer than epoch");
  }

  // Zero-padding an N-sample window to round(fs) samples puts DFT bins on a
  // 1 Hz grid; only the integer frequencies inside [fmin, fmax] are evaluated.
  const auto pad_len = static_cast<std::size_t>(std::llround(sample_rate_hz));
  std::vector<double> freqs;
  for (double f = std::ceil(params.fmin_hz - 1e-9); f <= params.fmax_hz + 1e-9; f += 1.0) {
    freqs.push_back(f);
  }
  if (freqs.empty()) throw InputError("spectrogram: empty frequency range");

  const std::size_t n_frames = (epoch.n_samples - win) / step + 1;
  std::vector<double> frame_times(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    frame_times[i] = params.epoch_start_s +
                     (static_cast<double>(i * step) + static_cast<double>(win) / 2.0) / sample_rate_hz;
  }

  // Precomputed DFT basis at the requested bins (segment is zero beyond the
  // window, so the sum runs over the window only).
  const std::size_t n_freqs = freqs.size();
  std::vector<double> cos_tab(n_freqs * win);
  std::vector<double> sin_tab(n_freqs * win);
  for (std::size_t fi = 0; fi < n_freqs; ++fi) {
    const double w = 2.0 * std::numbers::pi * freqs[fi] / static_cast<double>(pad_len);
    for (std::size_t t = 0; t < win; ++t) {
      cos_tab[fi * win + t] = std::cos(w * static_cast<double>(t));
      sin_tab[fi * win + t] = std::sin(w * static_cast<double>(t));
    }
  }

  std::vector<TimeFreqGrid> grids(epoch.n_channels);
  std::vector<double> segment(win);
  std::vector<double> tapered(win);
  for (std::size_t ch = 0; ch < epoch.n_channels; ++ch) {
    auto& grid = grids[ch];
    grid.freqs_hz = freqs;
    grid.frame_times_s = frame_times;
    grid.values.assign(n_freqs * n_frames, 0.0);

    for (std::size_t fr = 0; fr < n_frames; ++fr) {
      const std::size_t start = fr * step;
      double mean = 0.0;
      for (std::size_t t = 0; t < win; ++t) mean += epoch.at(ch, start + t);
      mean /= static_cast<double>(win);
      for (std::size_t t = 0; t < win; ++t) segment[t] = epoch.at(ch, start + t) - mean;

      for (std::size_t k = 0; k < tapers.k(); ++k) {
        const auto& taper = tapers.tapers[k];
        for (std::size_t t = 0; t < win; ++t) tapered[t] = taper[t] * segment[t];
        for (std::size_t fi = 0; fi < n_freqs; ++fi) {
          const double* ct = &cos_tab[fi * win];
          const double* st = &sin_tab[fi * win];
          double re = 0.0, im = 0.0;
          for (std::size_t t = 0; t < win; ++t) {
            re += tapered[t] * ct[t];
            im -= tapered[t] * st[t];
          }
          grid.at(fi, fr) += re * re + im * im;
        }
      }
      for (std::size_t fi = 0; fi < n_freqs; ++fi) {
        grid.at(fi, fr) /= static_cast<double>(tapers.k());
      }
    }
  }
  return grids;
}

TfrMap erd_ers(const TimeFreqGrid& power, double baseline_start_s, double baseline_end_s,
               const std::string& electrode) {
  std::vector<std::size_t> base_frames;
  for (std::size_t i = 0; i < power.n_frames(); ++i) {
    const double t = power.frame_times_s[i];
    if (t >= baseline_start_s - 1e-12 && t <= baseline_end_s + 1e-12) base_frames.push_back(i);
  }
  if (base_frames.empty()) {
    throw InputError("erd_ers: no frame centers inside the baseline interval");
  }

  TfrMap map;
  map.electrode = electrode;
  map.freqs_hz = power.freqs_hz;
  map.frame_times_s = power.frame_times_s;
  map.values.assign(power.values.size(), 0.0);

  for (std::size_t f = 0; f < power.n_freqs(); ++f) {
    double base = 0.0;
    for (const std::size_t i : base_frames) base += power.at(f, i);
    base /= static_cast<double>(base_frames.size());
    if (base <= 0.0) {
      map.flagged_bins.push_back(f);
      for (std::size_t t = 0; t < power.n_frames(); ++t) {
        map.at(f, t) = std::numeric_limits<double>::quiet_NaN();
      }
      continue;
    }
    for (std::size_t t = 0; t < power.n_frames(); ++t) {
      map.at(f, t) = 100.0 * (power.at(f, t) - base) / base;
    }
  }
  return map;
}

TfrMap average_tfr(const std::vector<TfrMap>& maps) {
  if (maps.empty()) throw InputError("average_tfr: empty map list");
  const TfrMap& first = maps.front();
  for (const auto& m : maps) {
    if (!m.same_grid(first) || m.electrode != first.electrode) {
      throw InputError("average_tfr: maps disagree on grid or electrode");
    }
  }
  TfrMap out;
  out.electrode = first.electrode;
  out.freqs_hz = first.freqs_hz;
  out.frame_times_s = first.frame_times_s;
  out.values.assign(first.values.size(), 0.0);
  for (const auto& m : maps) {
    for (std::size_t i = 0; i < m.values.size(); ++i) out.values[i] += m.values[i];
  }
  for (auto& v : out.values) v /= static_cast<double>(maps.size());
  for (std::size_t f = 0; f < out.n_freqs(); ++f) {
    if (std::isnan(out.at(f, 0))) out.flagged_bins.push_back(f);
  }
  return out;
}

double bandpower_change(const TfrMap& map, double f0_hz, double f1_hz, double t0_s, double t1_s) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < map.n_freqs(); ++f) {
    const double hz = map.freqs_hz[f];
    if (hz < f0_hz - 1e-12 || hz > f1_hz + 1e-12) continue;
    for (std::size_t t = 0; t < map.n_frames(); ++t) {
      const double ts = map.frame_times_s[t];
      if (ts < t0_s - 1e-12 || ts > t1_s + 1e-12) continue;
      const double v = map.at(f, t);
      if (std::isnan(v)) continue;
      sum += v;
      ++count;
    }
  }
  if (count == 0) {
    throw InputError("bandpower_change: no usable bins in band [" + std::to_string(f0_hz) + "," +
                     std::to_string(f1_hz) + "] Hz x interval [" + std::to_string(t0_s) + "," +
                     std::to_string(t1_s) + "] s");
  }
  return sum / static_cast<double>(count);
}

void write_tfr_csv(const TfrMap& map, const TaperSet& tapers, const SpectrogramParams& params,
                   std::ostream& out) {
  out << "# electrode=" << map.electrode << " tapers=" << tapers.k()
      << " nw=" << tapers.time_bandwidth << " window_s=" << params.window_s
      << " step_s=" << params.step_s << "\n";
  out << std::setprecision(10);
  out << "freq_hz";
  for (const double t : map.frame_times_s) out << "," << t;
  out << "\n";
  for (std::size_t f = 0; f < map.n_freqs(); ++f) {
    out << map.freqs_hz[f];
    for (std::size_t t = 0; t < map.n_frames(); ++t) out << "," << map.at(f, t);
    out << "\n";
  }
}

}  // namespace misynth
