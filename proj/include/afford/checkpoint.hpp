#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afford/core_types.hpp"
#include "afford/model.hpp"

namespace afford {

// On-disk layout (all integers little-endian):
//   8 bytes   magic "AFCKPT01"
//   u32       metadata length, then that many bytes of JSON
//   u32       array count
//   per array u32 name length + name bytes
//             u32 rank, u32 dims[rank]
//             f32 data (row-major, little-endian)
// Metadata carries iteration, best validation KLD, the flat config snapshot
// and the label space. Parameters are quantized to f32 on snapshot, so a
// save -> load round trip reproduces forward outputs bit-exactly.
struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  bool operator==(const NamedArray& o) const = default;
};

struct Checkpoint {
  std::int64_t iteration = 0;
  double best_val_kld = 0.0;
  std::map<std::string, std::string> config;  // flat key-value snapshot
  std::vector<std::string> affordance_names;
  std::vector<std::string> object_names;
  std::vector<NamedArray> arrays;

  bool operator==(const Checkpoint& o) const = default;
};

// Quantizes the model parameters to f32 and records metadata.
Checkpoint snapshot_params(const ModelParams& params, std::int64_t iteration,
                           double best_val_kld,
                           const std::map<std::string, std::string>& config,
                           const LabelSpace& labels);

// Rebuilds double-precision parameters; throws on any name/shape mismatch
// against the dims recorded in the checkpoint.
ModelParams params_from_checkpoint(const Checkpoint& ckpt);

ModelDims dims_from_config(const std::map<std::string, std::string>& config);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace afford
