#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "egcn/model.hpp"

namespace egcn {

/// Unreadable, mismatched or corrupt checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "EGCNCKPT", u32 version, u32-length config JSON (model config, seed, rng state),
/// then each parameter block in declaration order: u32 name length, name,
/// u32 rows, u32 cols, rows×cols f32. Little-endian.
std::string serialize_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(std::string_view bytes);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace egcn
