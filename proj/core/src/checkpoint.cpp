#include "misynth/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "misynth/errors.hpp"

namespace misynth {

namespace {

constexpr char kMagic[] = "MISYNTH_CKPT_V1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

struct Block {
  std::string name;
  std::array<std::size_t, 4> shape;
  const Tensor<float>* tensor;
};

// Params first, then batch-norm running stats, then Adam moments; order must
// match load_checkpoint exactly.
std::vector<Block> block_table(Checkpoint& ckpt) {
  std::vector<Block> blocks;
  for (const auto* p : ckpt.model.parameters()) {
    blocks.push_back({p->name, p->value.shape(), &p->value});
  }
  for (const auto* bn : ckpt.model.batch_norms()) {
    blocks.push_back({bn->name() + ".running_mean", bn->running_mean.shape(), &bn->running_mean});
    blocks.push_back({bn->name() + ".running_var", bn->running_var.shape(), &bn->running_var});
  }
  for (std::size_t i = 0; i < ckpt.adam_m.size(); ++i) {
    blocks.push_back({"adam.m." + std::to_string(i), ckpt.adam_m[i].shape(), &ckpt.adam_m[i]});
  }
  for (std::size_t i = 0; i < ckpt.adam_v.size(); ++i) {
    blocks.push_back({"adam.v." + std::to_string(i), ckpt.adam_v[i].shape(), &ckpt.adam_v[i]});
  }
  return blocks;
}

nlohmann::json history_to_json(const std::vector<EpochLogRow>& history) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : history) {
    rows.push_back({{"epoch", r.epoch},
                    {"train_total", r.train_total},
                    {"train_recon", r.train_recon},
                    {"train_kl", r.train_kl},
                    {"val_total", r.val_total},
                    {"val_recon", r.val_recon},
                    {"val_kl", r.val_kl},
                    {"wall_s", r.wall_s}});
  }
  return rows;
}

std::vector<EpochLogRow> history_from_json(const nlohmann::json& rows) {
  std::vector<EpochLogRow> history;
  for (const auto& r : rows) {
    EpochLogRow row;
    row.epoch = r.at("epoch").get<std::size_t>();
    row.train_total = r.at("train_total").get<double>();
    row.train_recon = r.at("train_recon").get<double>();
    row.train_kl = r.at("train_kl").get<double>();
    row.val_total = r.at("val_total").get<double>();
    row.val_recon = r.at("val_recon").get<double>();
    row.val_kl = r.at("val_kl").get<double>();
    row.wall_s = r.at("wall_s").get<double>();
    history.push_back(row);
  }
  return history;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt_in, const std::filesystem::path& path) {
  auto& ckpt = const_cast<Checkpoint&>(ckpt_in);  // block table needs non-const accessors
  const auto blocks = block_table(ckpt);

  nlohmann::json header;
  header["format_version"] = 1;
  const auto& mc = ckpt.model.config();
  header["model"] = {{"n_channels", mc.n_channels},
                     {"n_samples", mc.n_samples},
                     {"n_classes", mc.n_classes},
                     {"latent_dim", mc.latent_dim},
                     {"kernels_per_layer", mc.kernels_per_layer},
                     {"temporal_kernel", mc.temporal_kernel},
                     {"bn_eps", mc.bn_eps},
                     {"bn_momentum", mc.bn_momentum}};
  const auto& tc = ckpt.train_config;
  header["train"] = {{"batch_size", tc.batch_size},
                     {"max_epochs", tc.max_epochs},
                     {"patience", tc.patience},
                     {"latent_dim", tc.latent_dim},
                     {"kernels_per_layer", tc.kernels_per_layer},
                     {"learning_rate", tc.learning_rate},
                     {"beta1", tc.beta1},
                     {"beta2", tc.beta2},
                     {"adam_eps", tc.adam_eps},
                     {"seed", tc.seed},
                     {"val_noise_passes", tc.val_noise_passes},
                     {"loss_weighting", tc.loss_weighting}};
  header["history"] = history_to_json(ckpt.history);
  header["best_epoch"] = ckpt.best_epoch;
  header["best_val_loss"] = ckpt.best_val_loss;
  header["initial_val_loss"] = ckpt.initial_val_loss;
  header["adam"] = {{"t", ckpt.adam_t},
                    {"lr", ckpt.adam_hyper.lr},
                    {"beta1", ckpt.adam_hyper.beta1},
                    {"beta2", ckpt.adam_hyper.beta2},
                    {"eps", ckpt.adam_hyper.eps}};
  nlohmann::json jblocks = nlohmann::json::array();
  for (const auto& b : blocks) {
    jblocks.push_back({{"name", b.name}, {"shape", b.shape}});
  }
  header["blocks"] = std::move(jblocks);

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("checkpoint: cannot write '" + path.string() + "'");
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  const std::uint64_t len = header_text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& b : blocks) {
    out.write(reinterpret_cast<const char*>(b.tensor->data()),
              static_cast<std::streamsize>(b.tensor->size() * sizeof(float)));
  }
  if (!out) throw InputError("checkpoint: short write to '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint: cannot open '" + path.string() + "'");

  char magic[kMagicLen];
  in.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw IntegrityError("checkpoint: bad magic in '" + path.string() + "'");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw IntegrityError("checkpoint: truncated header length");
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IntegrityError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("checkpoint: header is not valid JSON: " + std::string(e.what()));
  }
  if (header.at("format_version").get<int>() != 1) {
    throw IntegrityError("checkpoint: unsupported format_version");
  }

  CvaeConfig mc;
  const auto& jm = header.at("model");
  mc.n_channels = jm.at("n_channels").get<std::size_t>();
  mc.n_samples = jm.at("n_samples").get<std::size_t>();
  mc.n_classes = jm.at("n_classes").get<std::size_t>();
  mc.latent_dim = jm.at("latent_dim").get<std::size_t>();
  mc.kernels_per_layer = jm.at("kernels_per_layer").get<std::size_t>();
  mc.temporal_kernel = jm.at("temporal_kernel").get<std::size_t>();
  mc.bn_eps = jm.at("bn_eps").get<double>();
  mc.bn_momentum = jm.at("bn_momentum").get<double>();

  Checkpoint ckpt(mc);
  const auto& jt = header.at("train");
  ckpt.train_config.batch_size = jt.at("batch_size").get<std::size_t>();
  ckpt.train_config.max_epochs = jt.at("max_epochs").get<std::size_t>();
  ckpt.train_config.patience = jt.at("patience").get<std::size_t>();
  ckpt.train_config.latent_dim = jt.at("latent_dim").get<std::size_t>();
  ckpt.train_config.kernels_per_layer = jt.at("kernels_per_layer").get<std::size_t>();
  ckpt.train_config.learning_rate = jt.at("learning_rate").get<double>();
  ckpt.train_config.beta1 = jt.at("beta1").get<double>();
  ckpt.train_config.beta2 = jt.at("beta2").get<double>();
  ckpt.train_config.adam_eps = jt.at("adam_eps").get<double>();
  ckpt.train_config.seed = jt.at("seed").get<std::uint64_t>();
  ckpt.train_config.val_noise_passes = jt.at("val_noise_passes").get<std::size_t>();
  ckpt.train_config.loss_weighting = jt.at("loss_weighting").get<std::string>();
  ckpt.history = history_from_json(header.at("history"));
  ckpt.best_epoch = header.at("best_epoch").get<std::size_t>();
  ckpt.best_val_loss = header.at("best_val_loss").get<double>();
  ckpt.initial_val_loss = header.at("initial_val_loss").get<double>();
  ckpt.adam_t = header.at("adam").at("t").get<long long>();
  ckpt.adam_hyper.lr = header.at("adam").at("lr").get<double>();
  ckpt.adam_hyper.beta1 = header.at("adam").at("beta1").get<double>();
  ckpt.adam_hyper.beta2 = header.at("adam").at("beta2").get<double>();
  ckpt.adam_hyper.eps = header.at("adam").at("eps").get<double>();

  // Rebuild the Adam moment holders so the block table has destinations.
  const auto params = ckpt.model.parameters();
  for (const auto* p : params) {
    ckpt.adam_m.push_back(Tensor<float>::zeros_like(p->value));
    ckpt.adam_v.push_back(Tensor<float>::zeros_like(p->value));
  }

  auto blocks = block_table(ckpt);
  const auto& jblocks = header.at("blocks");
  if (jblocks.size() != blocks.size()) {
    throw IntegrityError("checkpoint: block count mismatch (file has " +
                         std::to_string(jblocks.size()) + ", model expects " +
                         std::to_string(blocks.size()) + ")");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto name = jblocks[i].at("name").get<std::string>();
    const auto shape = jblocks[i].at("shape").get<std::array<std::size_t, 4>>();
    if (name != blocks[i].name || shape != blocks[i].shape) {
      throw IntegrityError("checkpoint: block '" + name + "' does not match expected '" +
                           blocks[i].name + "'");
    }
    auto* tensor = const_cast<Tensor<float>*>(blocks[i].tensor);
    in.read(reinterpret_cast<char*>(tensor->data()),
            static_cast<std::streamsize>(tensor->size() * sizeof(float)));
    if (!in) {
      throw IntegrityError("checkpoint: payload truncated at block '" + name + "'");
    }
  }
  in.peek();
  if (!in.eof()) throw IntegrityError("checkpoint: trailing bytes after payload");

  for (auto* bn : ckpt.model.batch_norms()) bn->mark_stats_initialized();
  return ckpt;
}

}  // namespace misynth
