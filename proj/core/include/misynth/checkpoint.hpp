#pragma once

#include <filesystem>

#include "misynth/train.hpp"

namespace misynth {

// Single-file checkpoint: magic line, JSON header (config, history, block
// table), then raw little-endian float32 blocks in declared parameter order
// followed by batch-norm running statistics and Adam moments. Round-trips
// bit-exactly; a reloaded model reproduces inference outputs to the bit.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace misynth
