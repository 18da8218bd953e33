#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpn2f/adam.hpp"
#include "tpn2f/model.hpp"

namespace tpn2f {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;

  bool operator==(const StoredTensor&) const = default;
};

/// File layout, all integers little-endian:
///   "TPN2FCKP" | u32 version | u64 header length | JSON header |
///   f64 payload | u32 CRC-32 of everything before it
/// The header carries the config snapshot, RNG state, epoch, optimizer
/// scalars and a name/shape/offset table into the payload.
struct Checkpoint {
  nlohmann::json config;
  std::vector<StoredTensor> parameters;
  std::optional<AdamState> optimizer;
  std::string rng_state;
  std::uint64_t epoch = 0;

  /// Copies the current parameter values of `model`.
  static Checkpoint capture(const Model& model);
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError(Corrupt) on truncation or a CRC mismatch and
/// CheckpointError(Version) on an unsupported version.
Checkpoint deserialize_checkpoint(std::string_view bytes);

/// Atomic: writes a sibling temp file and renames it over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Overwrites the model's parameters; names and shapes must match exactly.
void restore_parameters(Model& model, const Checkpoint& ckpt);

}  // namespace tpn2f
