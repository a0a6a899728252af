#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "echorec/model.hpp"

namespace echorec {

constexpr uint32_t kCheckpointVersion = 1;

/// Serialized model: magic "ECHC", u32 version, u32 metadata length, a
/// key=value metadata text block (model config, seed, loss curves), then the
/// flattened float32 parameters in registry order.
struct Checkpoint {
    uint32_t version = kCheckpointVersion;
    ModelConfig config;
    std::vector<float> params;
    std::map<std::string, std::string> metadata;
};

Checkpoint make_checkpoint(const EchoModel& model,
                           std::map<std::string, std::string> metadata = {});
EchoModel model_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace echorec
