#include "misynth/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "misynth/errors.hpp"
#include "misynth/rng.hpp"

namespace misynth {

namespace {
constexpr int kStoreVersion = 1;

// Payload floats are written as raw IEEE-754 bytes; this code assumes a
// little-endian host (checked at load/save time).
bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char byte;
  std::memcpy(&byte, &probe, 1);
  return byte == 1;
}
}  // namespace

EpochStore::EpochStore(double sample_rate_hz, std::vector<std::string> channels,
                       std::size_t n_samples)
    : sample_rate_hz_(sample_rate_hz), channels_(std::move(channels)), n_samples_(n_samples) {
  if (sample_rate_hz_ <= 0.0) throw InputError("epoch store: sample rate must be positive");
  if (channels_.empty() || n_samples_ == 0) {
    throw InputError("epoch store: channel list and sample count must be non-empty");
  }
}

void EpochStore::append(const Epoch& epoch) {
  epoch.validate();
  if (epoch.n_channels != channels_.size() || epoch.n_samples != n_samples_) {
    throw InputError("epoch store: epoch shape " + std::to_string(epoch.n_channels) + "x" +
                     std::to_string(epoch.n_samples) + " does not match store geometry " +
                     std::to_string(channels_.size()) + "x" + std::to_string(n_samples_));
  }
  payload_.insert(payload_.end(), epoch.data.begin(), epoch.data.end());
  labels_.push_back(epoch.label);
  subjects_.push_back(epoch.subject_id);
  kinds_.push_back(epoch.kind);
}

Epoch EpochStore::epoch(std::size_t i) const {
  Epoch e;
  e.n_channels = channels_.size();
  e.n_samples = n_samples_;
  const float* src = epoch_data(i);
  e.data.assign(src, src + e.n_channels * e.n_samples);
  e.label = labels_[i];
  e.subject_id = subjects_[i];
  e.kind = kinds_[i];
  return e;
}

const float* EpochStore::epoch_data(std::size_t i) const {
  return payload_.data() + i * channels_.size() * n_samples_;
}

bool EpochStore::all_labeled() const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [](const auto& l) { return l.has_value(); });
}

std::vector<std::string> EpochStore::distinct_subjects() const {
  std::set<std::string> s(subjects_.begin(), subjects_.end());
  return {s.begin(), s.end()};
}

EpochStore make_store(double sample_rate_hz, std::vector<std::string> channels,
                      std::size_t n_samples, const std::vector<Epoch>& epochs) {
  EpochStore store(sample_rate_hz, std::move(channels), n_samples);
  for (const auto& e : epochs) store.append(e);
  return store;
}

void save_store(const EpochStore& store, const std::filesystem::path& dir) {
  if (!host_is_little_endian()) {
    throw NumericError("epoch store: big-endian hosts are unsupported");
  }
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["format_version"] = kStoreVersion;
  manifest["sample_rate_hz"] = store.sample_rate_hz();
  manifest["channels"] = store.channels();
  manifest["n_samples"] = store.n_samples();
  manifest["count"] = store.n_epochs();
  nlohmann::json labels = nlohmann::json::array();
  nlohmann::json subjects = nlohmann::json::array();
  nlohmann::json kinds = nlohmann::json::array();
  for (std::size_t i = 0; i < store.n_epochs(); ++i) {
    labels.push_back(store.label(i) ? to_string(*store.label(i)) : "");
    subjects.push_back(store.subject(i));
    kinds.push_back(store.kind(i) == EpochKind::CueAligned ? "cue_aligned" : "resting");
  }
  manifest["labels"] = std::move(labels);
  manifest["subjects"] = std::move(subjects);
  manifest["kinds"] = std::move(kinds);

  std::ofstream mf(dir / "manifest.json");
  if (!mf) throw InputError("epoch store: cannot write " + (dir / "manifest.json").string());
  mf << manifest.dump(2) << "\n";
  mf.close();

  std::ofstream pf(dir / "epochs.f32", std::ios::binary);
  if (!pf) throw InputError("epoch store: cannot write " + (dir / "epochs.f32").string());
  const auto& payload = store.payload();
  pf.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!pf) throw InputError("epoch store: short write to epochs.f32");
}

EpochStore load_store(const std::filesystem::path& dir) {
  if (!host_is_little_endian()) {
    throw NumericError("epoch store: big-endian hosts are unsupported");
  }
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw InputError("epoch store: cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("epoch store: manifest.json is not valid JSON: " + std::string(e.what()));
  }

  if (!manifest.contains("format_version") || manifest["format_version"].get<int>() != kStoreVersion) {
    throw IntegrityError("epoch store: unsupported manifest format_version");
  }
  EpochStore store(manifest.at("sample_rate_hz").get<double>(),
                   manifest.at("channels").get<std::vector<std::string>>(),
                   manifest.at("n_samples").get<std::size_t>());
  const auto count = manifest.at("count").get<std::size_t>();
  const auto labels = manifest.at("labels").get<std::vector<std::string>>();
  const auto subjects = manifest.at("subjects").get<std::vector<std::string>>();
  const auto kinds = manifest.at("kinds").get<std::vector<std::string>>();
  if (labels.size() != count || subjects.size() != count || kinds.size() != count) {
    throw IntegrityError("epoch store: per-epoch manifest arrays do not match count");
  }

  std::ifstream pf(dir / "epochs.f32", std::ios::binary | std::ios::ate);
  if (!pf) throw InputError("epoch store: cannot open " + (dir / "epochs.f32").string());
  const std::size_t bytes = static_cast<std::size_t>(pf.tellg());
  const std::size_t expected = count * store.n_channels() * store.n_samples() * sizeof(float);
  if (bytes != expected) {
    throw IntegrityError("epoch store: payload is " + std::to_string(bytes) +
                         " bytes, manifest implies " + std::to_string(expected));
  }
  pf.seekg(0);
  std::vector<float> payload(count * store.n_channels() * store.n_samples());
  pf.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
  if (!pf) throw IntegrityError("epoch store: short read from epochs.f32");

  const std::size_t stride = store.n_channels() * store.n_samples();
  for (std::size_t i = 0; i < count; ++i) {
    Epoch e;
    e.n_channels = store.n_channels();
    e.n_samples = store.n_samples();
    e.data.assign(payload.begin() + static_cast<std::ptrdiff_t>(i * stride),
                  payload.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
    e.subject_id = subjects[i];
    if (kinds[i] == "cue_aligned") {
      e.kind = EpochKind::CueAligned;
    } else if (kinds[i] == "resting") {
      e.kind = EpochKind::Resting;
    } else {
      throw IntegrityError("epoch store: unknown epoch kind '" + kinds[i] + "'");
    }
    if (!labels[i].empty()) e.label = label_from_string(labels[i]);
    store.append(e);
  }
  return store;
}

std::pair<EpochStore, EpochStore> split_train_val(const EpochStore& store,
                                                  double val_fraction,
                                                  std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw InputError("split_train_val: val_fraction must be in (0,1)");
  }
  if (!store.all_labeled()) {
    throw InputError("split_train_val: every epoch must carry a class label");
  }

  // Strata keyed by (label, subject); ordered map keeps iteration deterministic.
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < store.n_epochs(); ++i) {
    strata[{static_cast<int>(*store.label(i)), store.subject(i)}].push_back(i);
  }
  for (const auto& [key, idx] : strata) {
    if (idx.size() < 2) {
      throw InputError("split_train_val: stratum (" + to_string(static_cast<Label>(key.first)) +
                       ", '" + key.second + "') has fewer than 2 epochs");
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> train_idx;
  for (auto& [key, idx] : strata) {
    rng.shuffle(idx);
    const auto n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      (j < n_val ? val_idx : train_idx).push_back(idx[j]);
    }
  }
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  auto build = [&](const std::vector<std::size_t>& indices) {
    EpochStore out(store.sample_rate_hz(), store.channels(), store.n_samples());
    for (const std::size_t i : indices) out.append(store.epoch(i));
    return out;
  };
  return {build(train_idx), build(val_idx)};
}

}  // namespace misynth
