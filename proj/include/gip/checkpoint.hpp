#pragma once

#include <string>

#include "gip/model.hpp"

namespace gip {

/// Versioned binary container: magic + version, the resolved config text,
/// then the named parameter tensors in enumeration order.
void save_checkpoint(const ModelState& model, const std::string& config_text, const std::string& path);

struct LoadedCheckpoint {
    ModelState model;
    TrainConfig config;
    std::string config_text;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace gip
