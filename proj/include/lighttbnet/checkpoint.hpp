#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lighttbnet/model.hpp"

namespace ltbn {

// Binary layout, little-endian throughout:
//
//   "LTBN"                      4 bytes magic
//   u32 version                 kCheckpointVersion
//   u32 meta_len, meta bytes    UTF-8 JSON metadata
//   u32 tensor_count
//   tensor_count x {
//     u16 name_len, name bytes
//     u8  dtype                 1 = float32
//     u8  rank
//     u32 dims[rank]
//     f32 payload[prod(dims)]
//   }
//
// Parameters come first in parameter-registry order, followed by BatchNorm
// running statistics.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

enum class CheckpointErrorKind {
  Io,               // cannot open / write the file
  NotACheckpoint,   // bad magic
  VersionMismatch,  // unknown format version
  Truncated,        // file ends inside a declared field
  Malformed,        // unparseable metadata, unknown dtype, trailing bytes
  Structure,        // tensor table does not match the embedded model config
};

const char* checkpoint_error_name(CheckpointErrorKind kind);

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(checkpoint_error_name(kind)) + ": " + msg), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

struct CheckpointMeta {
  ModelConfig model;
  int fold_id = -1;
  int epoch = 0;
  double val_auc = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json preprocessing = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json meta_to_json(const CheckpointMeta& m);
CheckpointMeta meta_from_json(const nlohmann::json& j);

struct CheckpointTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
  bool operator==(const CheckpointTensor&) const = default;
};

struct Checkpoint {
  CheckpointMeta meta;
  std::vector<CheckpointTensor> tensors;
};

/// Snapshot of parameters and running statistics.
Checkpoint capture_checkpoint(LightTBNet<float>& model, CheckpointMeta meta);
/// Copies tensors into `model`. Throws Structure on any missing, extra or
/// mis-shaped tensor, naming it.
void restore_checkpoint(const Checkpoint& ckpt, LightTBNet<float>& model);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Rebuilds the model from the embedded config and loads weights, in eval mode.
LightTBNet<float> load_model(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);
LightTBNet<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace ltbn
