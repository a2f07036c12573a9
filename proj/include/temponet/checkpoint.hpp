#pragma once

#include <memory>
#include <string>

#include "temponet/model.hpp"

namespace temponet {

// enum <-> string names used by config JSON, checkpoints, and CLI flags
std::string to_string(EmbeddingMode mode);
std::string to_string(ScaleMode mode);
std::string to_string(MaskMode mode);
std::string to_string(Activation act);
EmbeddingMode embedding_mode_from_string(const std::string& s);
ScaleMode scale_mode_from_string(const std::string& s);
MaskMode mask_mode_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& json_text);

// Versioned binary container: magic, JSON header (kind + config), then the
// named parameter tensors as raw 64-bit values (little-endian host order).
// Round-trips bitwise.
void save_checkpoint(const std::string& path, const Forecaster<double>& model);
std::unique_ptr<Forecaster<double>> load_checkpoint(const std::string& path);

}  // namespace temponet
