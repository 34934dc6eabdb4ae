#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "entnet/model.hpp"

namespace entnet {

inline constexpr char kCheckpointMagic[8] = {'E', 'N', 'T', 'N', 'E', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

/// Binary container; see docs/checkpoint.md for the byte layout. Values are
/// stored as little-endian 32-bit floats, so a round trip rounds each weight
/// to float precision.
void save_checkpoint(std::ostream& out, const Model& model, const nlohmann::json& extra = {});
void save_checkpoint(const std::string& path, const Model& model,
                     const nlohmann::json& extra = {});

struct LoadedCheckpoint {
  Model model;
  nlohmann::json extra;
};

/// Throws BadCheckpoint on a bad magic, unknown version, truncated data, or
/// a tensor whose name or shape does not match the stored configuration.
LoadedCheckpoint load_checkpoint(std::istream& in);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace entnet
