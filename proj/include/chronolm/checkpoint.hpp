#pragma once

#include <string>

#include <json.hpp>

#include "chronolm/model.hpp"

namespace chronolm {

// A versioned named-tensor map: the unit the series, interpolation and PCA
// operate on. File layout: magic "CHRONOLM", u32 version, u64 header length,
// JSON header (config, meta, tensor directory), then little-endian float32
// payloads, each tensor 64-byte aligned relative to the payload start.
struct Checkpoint {
  ModelConfig config;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  ModelParams<float> params;

  Checkpoint() = default;
  explicit Checkpoint(ModelParams<float> p)
      : config(p.config), params(std::move(p)) {}

  int trained_through_year() const {
    return meta.contains("trained_through_year")
               ? meta["trained_through_year"].get<int>()
               : 0;
  }
  long total_steps() const {
    return meta.contains("total_steps") ? meta["total_steps"].get<long>() : 0;
  }
};

inline constexpr char kCheckpointMagic[8] = {'C', 'H', 'R', 'O', 'N', 'O', 'L', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Digest of a loss curve for checkpoint metadata.
nlohmann::ordered_json loss_digest(const std::vector<double>& curve);

}  // namespace chronolm
