// SPDX-License-Identifier: Apache-2.0
#pragma once

// A saved model is a parameter checkpoint (<stem>.sfp) plus a JSON sidecar
// (<stem>.json) holding the ModelConfig, loss weights and caller metadata.
// Batch-norm running statistics are stored in the checkpoint as
// "bn/<layer>/running_mean" and "bn/<layer>/running_var"; parameters as
// "param/<name>".

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "shapefat/autodiff/checkpoint.hpp"
#include "shapefat/model/network.hpp"

namespace shapefat::model {

nlohmann::json config_to_json(const ModelConfig& config);
/// Missing keys keep their defaults; malformed values throw ConfigError.
ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {});

std::vector<ad::NamedTensor> to_named_tensors(const ModelParams& model);
/// Copies tensors into a model built from the same config. Every parameter
/// and statistic must be present with a matching shape.
void assign_named_tensors(ModelParams& model, const std::vector<ad::NamedTensor>& tensors);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

void save_model(const ModelParams& model, const std::filesystem::path& checkpoint,
                const nlohmann::json& metadata = nlohmann::json::object());
ModelParams load_model(const std::filesystem::path& checkpoint);
/// The sidecar's "metadata" object.
nlohmann::json load_model_metadata(const std::filesystem::path& checkpoint);

}  // namespace shapefat::model
