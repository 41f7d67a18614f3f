#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "induction_lens/model.hpp"
#include "induction_lens/tensor.hpp"

namespace ilens {

// Container used for model weights (`.ilw`), optimizer state and probe parameters.
//
// Layout: a UTF-8 manifest terminated by the line "end", followed by the raw little-endian
// row-major float32 payload.
//
//   induction-lens-archive 1
//   kind model
//   meta <key> <value>
//   tensor <name> <rank> <dim0> ... <dimN> <byte-offset> <byte-length>
//   end
//
// Offsets are relative to the first payload byte; tensors are contiguous and in manifest order.
struct Archive {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::pair<std::string, TensorF32>> tensors;

    const std::string* find_meta(const std::string& key) const;
    const TensorF32* find_tensor(const std::string& name) const;
};

void write_archive(const Archive& archive, const std::filesystem::path& path);
// Throws CorruptionError on a malformed manifest or a manifest/payload size mismatch.
Archive read_archive(const std::filesystem::path& path);

inline constexpr const char* kWeightsExtension = ".ilw";

void save_weights(const ModelWeights& weights, const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& extra_meta = {});
// Round-trips bit-exactly. Unknown, missing or mis-shaped tensors raise CorruptionError.
ModelWeights load_weights(const std::filesystem::path& path);

ModelConfig config_from_meta(const Archive& archive);

}  // namespace ilens
