#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "misynth/checkpoint.hpp"
#include "misynth/csvio.hpp"
#include "misynth/cvae.hpp"
#include "misynth/edf.hpp"
#include "misynth/errors.hpp"
#include "misynth/filters.hpp"
#include "misynth/generate.hpp"
#include "misynth/gradcheck.hpp"
#include "misynth/recording.hpp"
#include "misynth/reference.hpp"
#include "misynth/stats.hpp"
#include "misynth/store.hpp"
#include "misynth/synthbench.hpp"
#include "misynth/tfr.hpp"
#include "misynth/train.hpp"

namespace fs = std::filesystem;
using namespace misynth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

// EDF labels come padded and dotted ("Fc3.."); requested names are matched
// after uppercasing and stripping trailing dots.
std::string normalize_channel(std::string name) {
  while (!name.empty() && (name.back() == '.' || name.back() == ' ')) name.pop_back();
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return name;
}

std::vector<std::string> parse_channel_list(const std::string& csv) {
  std::vector<std::string> names;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(normalize_channel(item));
  }
  return names;
}

void write_run_config(CLI::App& app, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream f(out_dir / "run_config.txt");
  f << app.config_to_str(true, false);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  return f;
}

// ---------------------------------------------------------------- ingest --

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string events;
  std::string channels_csv;
  bool cues = false;
  bool resting = false;
  double csv_rate = 0.0;
  double band_low = 4.0, band_high = 30.0;
  int filter_order = 3;
  std::string subject_override;
  std::string out;
};

Recording load_recording(const fs::path& path, const IngestArgs& args) {
  Recording rec;
  if (path.extension() == ".csv") {
    if (args.csv_rate <= 0.0) {
      throw InputError("ingest: --csv-rate is required for CSV input '" + path.string() + "'");
    }
    rec = read_csv_recording_file(path.string(), args.csv_rate);
  } else {
    rec = read_edf_file(path.string());
  }
  for (auto& name : rec.channels) name = normalize_channel(name);
  if (!args.subject_override.empty()) {
    rec.subject_id = args.subject_override;
  } else if (rec.subject_id.empty()) {
    rec.subject_id = path.stem().string();
  }
  return rec;
}

fs::path events_file_for(const fs::path& input, const std::string& events) {
  const fs::path p(events);
  if (fs::is_directory(p)) return p / (input.stem().string() + ".csv");
  return p;
}

int cmd_ingest(CLI::App& app, const IngestArgs& args) {
  if (args.cues == args.resting) {
    throw InputError("ingest: exactly one of --cues / --resting is required");
  }
  if (args.cues && args.events.empty()) {
    throw InputError("ingest: --events is required with --cues");
  }
  const std::vector<std::string> wanted =
      args.channels_csv.empty() ? sensorimotor_channels() : parse_channel_list(args.channels_csv);

  const IirFilter filter =
      design_butterworth_bandpass(args.filter_order, args.band_low, args.band_high, 0.0 + 160.0);

  std::unique_ptr<EpochStore> store;
  std::map<std::string, std::size_t> per_subject;
  for (const auto& input : args.inputs) {
    const fs::path path(input);
    Recording rec = load_recording(path, args);
    // Preprocess the continuous signal over the full montage, then select.
    rec = common_average_reference(rec);
    const IirFilter f = rec.sample_rate_hz == filter.sample_rate_hz
                            ? filter
                            : design_butterworth_bandpass(args.filter_order, args.band_low,
                                                          args.band_high, rec.sample_rate_hz);
    for (auto& channel : rec.samples) channel = filter_causal(f, channel);
    rec = select_channels(rec, wanted);

    std::vector<Epoch> epochs;
    if (args.resting) {
      epochs = extract_resting_epochs(rec);
    } else {
      const auto events = read_events_csv_file(events_file_for(path, args.events).string());
      if (events.empty()) {
        throw InputError("ingest: no events in '" + events_file_for(path, args.events).string() + "'");
      }
      std::map<Label, std::vector<double>> by_label;
      for (const auto& e : events) by_label[label_from_string(e.label)].push_back(e.onset_s);
      for (const auto& [label, onsets] : by_label) {
        auto cut = extract_cue_epochs(rec, onsets, label);
        epochs.insert(epochs.end(), cut.begin(), cut.end());
      }
    }
    if (!store) {
      store = std::make_unique<EpochStore>(rec.sample_rate_hz, rec.channels, epochs.front().n_samples);
    }
    for (const auto& e : epochs) store->append(e);
    per_subject[rec.subject_id] += epochs.size();
  }

  save_store(*store, args.out);
  write_run_config(app, args.out);
  for (const auto& [subject, n] : per_subject) {
    std::cout << subject << ": " << n << " epochs\n";
  }
  std::cout << "wrote " << store->n_epochs() << " epochs to " << args.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ synth-data --

struct SynthArgs {
  SynthSpec spec;
  std::string out;
};

int cmd_synth_data(CLI::App& app, const SynthArgs& args) {
  const SynthDataset data = make_synthetic_dataset(args.spec);
  const fs::path out(args.out);
  save_store(data.cue_store, out / "cue_store");
  save_store(data.resting_store, out / "resting_store");
  auto truth = open_out(out / "ground_truth.csv");
  write_truth_csv(data, truth);
  write_run_config(app, out);
  std::cout << "wrote " << data.cue_store.n_epochs() << " cue epochs and "
            << data.resting_store.n_epochs() << " resting epochs to " << args.out << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- train --

struct TrainArgs {
  std::string train_store;
  std::string val_store;
  double val_fraction = 0.0;
  std::uint64_t split_seed = 1;
  TrainConfig cfg;
  std::string out;
};

int cmd_train(CLI::App& app, const TrainArgs& args) {
  EpochStore train_set = load_store(args.train_store);
  EpochStore val_set;
  if (!args.val_store.empty()) {
    val_set = load_store(args.val_store);
  } else if (args.val_fraction > 0.0) {
    auto [tr, va] = split_train_val(train_set, args.val_fraction, args.split_seed);
    train_set = std::move(tr);
    val_set = std::move(va);
  } else {
    throw InputError("train: provide --val or --val-fraction");
  }

  std::cout << "training: " << train_set.n_epochs() << " train / " << val_set.n_epochs()
            << " validation trials, batch " << args.cfg.batch_size << ", max epochs "
            << args.cfg.max_epochs << ", latent " << args.cfg.latent_dim << ", kernels "
            << args.cfg.kernels_per_layer << ", seed " << args.cfg.seed << "\n";

  const Checkpoint ckpt = train_cvae(train_set, val_set, args.cfg, &std::cout);

  const fs::path out(args.out);
  fs::create_directories(out);
  save_checkpoint(ckpt, out / "checkpoint.ckpt");
  auto log = open_out(out / "train_log.csv");
  write_train_log_csv(ckpt.history, log);
  auto params = open_out(out / "param_count.txt");
  print_parameter_count(ckpt.model.count_parameters(), params);
  write_run_config(app, out);
  std::cout << "best epoch " << ckpt.best_epoch << ", best validation loss " << ckpt.best_val_loss
            << " (initial " << ckpt.initial_val_loss << ")\n";
  return kExitOk;
}

// -------------------------------------------------------------- generate --

struct GenerateArgs {
  std::string checkpoint;
  std::string resting;
  std::string condition;
  bool all = false;
  std::size_t samples = 1;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(CLI::App& app, const GenerateArgs& args) {
  if (args.all == !args.condition.empty()) {
    throw InputError("generate: provide exactly one of --condition or --all");
  }
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const EpochStore resting = load_store(args.resting);
  const fs::path out(args.out);

  auto write_set = [&](const ArtificialEpochSet& set) {
    const std::string tag = to_string(set.condition);
    std::string lower = tag;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    save_store(set.store, out / ("artificial_" + lower));
    auto f = open_out(out / ("provenance_" + lower + ".csv"));
    write_provenance_csv(set, f);
    std::cout << tag << ": " << set.store.n_epochs() << " artificial epochs (c = ["
              << ConditionVector::from_label(set.condition).entries[0] << ","
              << ConditionVector::from_label(set.condition).entries[1] << ","
              << ConditionVector::from_label(set.condition).entries[2] << "])\n";
  };

  if (args.all) {
    for (const auto& set : generate_all_conditions(ckpt.model, resting, args.seed, args.samples)) {
      write_set(set);
    }
  } else {
    write_set(generate_conditioned(ckpt.model, resting, label_from_string(args.condition),
                                   args.samples, args.seed));
  }
  write_run_config(app, out);
  return kExitOk;
}

// ------------------------------------------------------------------- tfr --

struct TfrArgs {
  std::string store;
  std::string out;
  bool images = false;
  double nw = 1.5;
  std::size_t k = 2;
  double baseline_start = -0.5, baseline_end = 0.0;
};

void write_tfr_ppm(const TfrMap& map, const fs::path& path) {
  // Symmetric diverging colormap (blue-white-red) over +/- max |value|.
  double limit = 1e-9;
  for (const double v : map.values) {
    if (std::isfinite(v)) limit = std::max(limit, std::abs(v));
  }
  constexpr int kScale = 8;
  const int w = static_cast<int>(map.n_frames()) * kScale;
  const int h = static_cast<int>(map.n_freqs()) * kScale;
  std::ofstream f(path, std::ios::binary);
  f << "P6\n" << w << " " << h << "\n255\n";
  for (int y = 0; y < h; ++y) {
    // Highest frequency on top.
    const std::size_t fi = map.n_freqs() - 1 - static_cast<std::size_t>(y / kScale);
    for (int x = 0; x < w; ++x) {
      const double v = map.at(fi, static_cast<std::size_t>(x / kScale));
      unsigned char rgb[3] = {255, 255, 255};
      if (std::isfinite(v)) {
        const double t = std::clamp(v / limit, -1.0, 1.0);
        if (t >= 0) {  // white -> red
          rgb[1] = rgb[2] = static_cast<unsigned char>(255.0 * (1.0 - t));
        } else {  // white -> blue
          rgb[0] = rgb[1] = static_cast<unsigned char>(255.0 * (1.0 + t));
        }
      } else {
        rgb[0] = rgb[1] = rgb[2] = 128;  // flagged bin
      }
      f.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

int cmd_tfr(CLI::App& app, const TfrArgs& args) {
  const EpochStore store = load_store(args.store);
  const SpectrogramParams params;
  const std::size_t win = static_cast<std::size_t>(std::llround(params.window_s * store.sample_rate_hz()));
  const TaperSet tapers = dpss(win, args.nw, args.k);
  const fs::path out(args.out);
  fs::create_directories(out);

  // Per-trial ERD maps, averaged per electrode across all epochs.
  std::vector<std::vector<TfrMap>> maps(store.n_channels());
  for (std::size_t i = 0; i < store.n_epochs(); ++i) {
    const auto grids = multitaper_spectrogram(store.epoch(i), tapers, params, store.sample_rate_hz());
    for (std::size_t ch = 0; ch < grids.size(); ++ch) {
      maps[ch].push_back(
          erd_ers(grids[ch], args.baseline_start, args.baseline_end, store.channels()[ch]));
    }
  }
  for (std::size_t ch = 0; ch < store.n_channels(); ++ch) {
    const TfrMap avg = average_tfr(maps[ch]);
    auto f = open_out(out / ("tfr_" + store.channels()[ch] + ".csv"));
    write_tfr_csv(avg, tapers, params, f);
    if (args.images) {
      write_tfr_ppm(avg, out / ("tfr_" + store.channels()[ch] + ".ppm"));
    }
  }
  write_run_config(app, out);
  std::cout << "wrote " << store.n_channels() << " averaged ERD/ERS maps ("
            << maps[0][0].n_freqs() << "x" << maps[0][0].n_frames() << " grid, "
            << store.n_epochs() << " epochs) to " << args.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- bandpower --

struct BandpowerArgs {
  std::string store_right, store_left, store_feet;
  std::string out;
  double t0 = 0.5, t1 = 1.5;
};

struct SubjectBand {
  std::string subject, cls, channel;
  double alpha = 0, beta = 0;
};

int cmd_bandpower(CLI::App& app, const BandpowerArgs& args) {
  const std::array<std::pair<Label, std::string>, 3> inputs = {{
      {Label::Right, args.store_right},
      {Label::Left, args.store_left},
      {Label::Feet, args.store_feet},
  }};
  const SpectrogramParams params;

  std::vector<SubjectBand> rows;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> box_values;
  for (const auto& [label, path] : inputs) {
    if (path.empty()) throw InputError("bandpower: all three class stores are required");
    const EpochStore store = load_store(path);
    const std::size_t win =
        static_cast<std::size_t>(std::llround(params.window_s * store.sample_rate_hz()));
    const TaperSet tapers = dpss(win, 1.5, 2);

    // Subject-level value: mean over that subject's epochs, per channel/band.
    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < store.n_epochs(); ++i) by_subject[store.subject(i)].push_back(i);
    for (const auto& [subject, idx] : by_subject) {
      std::vector<double> alpha_sum(store.n_channels(), 0.0);
      std::vector<double> beta_sum(store.n_channels(), 0.0);
      for (const std::size_t i : idx) {
        const auto grids =
            multitaper_spectrogram(store.epoch(i), tapers, params, store.sample_rate_hz());
        for (std::size_t ch = 0; ch < grids.size(); ++ch) {
          const TfrMap map = erd_ers(grids[ch], -0.5, 0.0, store.channels()[ch]);
          alpha_sum[ch] += bandpower_change(map, kAlphaLowHz, kAlphaHighHz, args.t0, args.t1);
          beta_sum[ch] += bandpower_change(map, kBetaLowHz, kBetaHighHz, args.t0, args.t1);
        }
      }
      for (std::size_t ch = 0; ch < store.n_channels(); ++ch) {
        SubjectBand row;
        row.subject = subject;
        row.cls = to_string(label);
        row.channel = store.channels()[ch];
        row.alpha = alpha_sum[ch] / static_cast<double>(idx.size());
        row.beta = beta_sum[ch] / static_cast<double>(idx.size());
        rows.push_back(row);
        box_values[{row.cls, "alpha", row.channel}].push_back(row.alpha);
        box_values[{row.cls, "beta", row.channel}].push_back(row.beta);
      }
    }
  }

  const fs::path out(args.out);
  fs::create_directories(out);
  {
    auto f = open_out(out / "bandpower.csv");
    f << "subject,class,channel,alpha_change,beta_change\n";
    for (const auto& r : rows) {
      f << r.subject << "," << r.cls << "," << r.channel << "," << r.alpha << "," << r.beta << "\n";
    }
  }
  {
    auto f = open_out(out / "boxstats.csv");
    f << "class,band,channel,median,q1,q3,min,max,n\n";
    for (const auto& [key, values] : box_values) {
      const BoxStats s = boxstats(values);
      f << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key) << ","
        << s.median << "," << s.q1 << "," << s.q3 << "," << s.min << "," << s.max << "," << s.n
        << "\n";
    }
  }
  write_run_config(app, out);
  std::cout << "wrote " << rows.size() << " subject/class/channel rows to " << args.out << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- gradcheck --

int cmd_gradcheck(std::uint64_t seed, bool inject_sign_flip) {
  GradCheckOptions opt;
  opt.seed = seed;
  opt.inject_sign_flip = inject_sign_flip;
  const auto reports = run_gradient_checks(opt);
  bool all_pass = true;
  for (const auto& r : reports) {
    const bool ok = r.pass(opt.tolerance);
    all_pass = all_pass && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << r.name << "  max_rel_err=" << r.max_rel_err
              << "  coords=" << r.coords_checked << "\n";
  }
  std::cout << (all_pass ? "gradient checks passed" : "gradient checks FAILED") << " (tolerance "
            << opt.tolerance << ")\n";
  return all_pass ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------- report --

int cmd_report(CLI::App& app, const std::string& bandpower_csv, const std::string& out_dir) {
  std::ifstream in(bandpower_csv);
  if (!in) throw InputError("report: cannot open '" + bandpower_csv + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("report: empty bandpower csv");
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> box_values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw InputError("report: row " + std::to_string(row) + " must have 5 fields");
    }
    box_values[{fields[1], "alpha", fields[2]}].push_back(std::stod(fields[3]));
    box_values[{fields[1], "beta", fields[2]}].push_back(std::stod(fields[4]));
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  auto f = open_out(out / "boxstats.csv");
  f << "class,band,channel,median,q1,q3,min,max,n\n";
  std::cout << "class band channel: median [q1, q3] (min..max, n)\n";
  for (const auto& [key, values] : box_values) {
    const BoxStats s = boxstats(values);
    f << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key) << "," << s.median
      << "," << s.q1 << "," << s.q3 << "," << s.min << "," << s.max << "," << s.n << "\n";
    std::cout << std::get<0>(key) << " " << std::get<1>(key) << " " << std::get<2>(key) << ": "
              << s.median << " [" << s.q1 << ", " << s.q3 << "] (" << s.min << ".." << s.max
              << ", n=" << s.n << ")\n";
  }
  write_run_config(app, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"misynth: condition-specific artificial motor imagery EEG via a conditional VAE"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file (flags override)");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "preprocess recordings into an epoch store");
  c_ingest->add_option("--input", ingest.inputs, "EDF or CSV recording files")->required();
  c_ingest->add_option("--events", ingest.events, "events CSV (onset_seconds,label) or directory");
  c_ingest->add_flag("--cues", ingest.cues, "cut cue-aligned epochs");
  c_ingest->add_flag("--resting", ingest.resting, "cut resting-state epochs");
  c_ingest->add_option("--channels", ingest.channels_csv, "comma-separated channel names (default: 15-channel sensorimotor strip)");
  c_ingest->add_option("--csv-rate", ingest.csv_rate, "sample rate for CSV inputs (Hz)");
  c_ingest->add_option("--band", [&ingest](const std::vector<std::string>& vals) {
    const auto parts = split_csv_line(vals.back());
    if (parts.size() != 2) return false;
    ingest.band_low = std::stod(parts[0]);
    ingest.band_high = std::stod(parts[1]);
    return true;
  }, "bandpass edges low,high in Hz (default 4,30)");
  c_ingest->add_option("--filter-order", ingest.filter_order, "Butterworth prototype order");
  c_ingest->add_option("--subject", ingest.subject_override, "subject id override");
  c_ingest->add_option("--out", ingest.out, "output store directory")->required();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "generate a synthetic benchmark dataset");
  c_synth->add_option("--subjects", synth.spec.n_subjects, "number of subjects");
  c_synth->add_option("--trials-per-class", synth.spec.trials_per_class, "cue trials per class per subject");
  c_synth->add_option("--resting-per-subject", synth.spec.resting_per_subject, "resting epochs per subject");
  c_synth->add_option("--pink-std", synth.spec.pink_noise_std, "1/f-shaped noise std");
  c_synth->add_option("--white-std", synth.spec.white_noise_std, "white noise std");
  c_synth->add_option("--seed", synth.spec.seed, "generator seed");
  c_synth->add_option("--out", synth.out, "output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train the conditional VAE");
  c_train->add_option("--train", train.train_store, "training store directory")->required();
  c_train->add_option("--val", train.val_store, "validation store directory");
  c_train->add_option("--val-fraction", train.val_fraction, "stratified split fraction when --val is absent");
  c_train->add_option("--split-seed", train.split_seed, "seed for --val-fraction split");
  c_train->add_option("--seed", train.cfg.seed, "training seed (init, shuffle, noise)");
  c_train->add_option("--batch-size", train.cfg.batch_size, "trials per batch");
  c_train->add_option("--max-epochs", train.cfg.max_epochs, "epoch cap");
  c_train->add_option("--patience", train.cfg.patience, "early-stop patience (epochs)");
  c_train->add_option("--latent-dim", train.cfg.latent_dim, "latent dimensionality");
  c_train->add_option("--kernels", train.cfg.kernels_per_layer, "kernels per convolution layer");
  c_train->add_option("--lr", train.cfg.learning_rate, "Adam learning rate");
  c_train->add_option("--val-passes", train.cfg.val_noise_passes, "noise draws averaged per validation pass");
  c_train->add_option("--out", train.out, "output directory")->required();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "decode resting epochs into artificial condition-specific epochs");
  c_gen->add_option("--checkpoint", gen.checkpoint, "trained checkpoint file")->required();
  c_gen->add_option("--resting", gen.resting, "resting store directory")->required();
  c_gen->add_option("--condition", gen.condition, "target condition: RIGHT, LEFT or FEET");
  c_gen->add_flag("--all", gen.all, "generate all three conditions with shared noise");
  c_gen->add_option("--samples", gen.samples, "samples per resting epoch");
  c_gen->add_option("--seed", gen.seed, "noise seed");
  c_gen->add_option("--out", gen.out, "output directory")->required();

  TfrArgs tfr;
  auto* c_tfr = app.add_subcommand("tfr", "averaged ERD/ERS time-frequency maps per electrode");
  c_tfr->add_option("--store", tfr.store, "epoch store directory")->required();
  c_tfr->add_option("--out", tfr.out, "output directory")->required();
  c_tfr->add_flag("--images", tfr.images, "also write PPM images");
  c_tfr->add_option("--nw", tfr.nw, "taper time-bandwidth product");
  c_tfr->add_option("--tapers", tfr.k, "number of Slepian tapers");

  BandpowerArgs bp;
  auto* c_bp = app.add_subcommand("bandpower", "subject-level alpha/beta power changes and box statistics");
  c_bp->add_option("--store-right", bp.store_right, "RIGHT store")->required();
  c_bp->add_option("--store-left", bp.store_left, "LEFT store")->required();
  c_bp->add_option("--store-feet", bp.store_feet, "FEET store")->required();
  c_bp->add_option("--out", bp.out, "output directory")->required();

  std::uint64_t gc_seed = 1;
  bool gc_flip = false;
  auto* c_gc = app.add_subcommand("gradcheck", "finite-difference verification of all gradients");
  c_gc->add_option("--seed", gc_seed, "rng seed");
  c_gc->add_flag("--inject-sign-flip", gc_flip, "self-test hook: corrupt one gradient")->group("");

  std::string report_csv, report_out;
  auto* c_report = app.add_subcommand("report", "box statistics from a bandpower CSV");
  c_report->add_option("--bandpower", report_csv, "bandpower.csv from the bandpower command")->required();
  c_report->add_option("--out", report_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_ingest->parsed()) return cmd_ingest(app, ingest);
    if (c_synth->parsed()) return cmd_synth_data(app, synth);
    if (c_train->parsed()) return cmd_train(app, train);
    if (c_gen->parsed()) return cmd_generate(app, gen);
    if (c_tfr->parsed()) return cmd_tfr(app, tfr);
    if (c_bp->parsed()) return cmd_bandpower(app, bp);
    if (c_gc->parsed()) return cmd_gradcheck(gc_seed, gc_flip);
    if (c_report->parsed()) return cmd_report(app, report_csv, report_out);
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
