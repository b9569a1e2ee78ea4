// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "t2seg/document.hpp"
#include "t2seg/embedding.hpp"
#include "t2seg/model.hpp"

namespace t2seg {

inline constexpr char kCheckpointMagic[] = "T2CKPT01";

/// Trained model plus everything needed to feed it: configuration, topic
/// names and the embedding column layout it was trained on.
struct Checkpoint {
  ModelConfig config;
  TopicVocabulary vocab;
  EmbeddingLayout layout;
  ModelParams<float> params;
  /// Free-form training metadata (resolved train config, seeds).
  nlohmann::json training = nlohmann::json::object();
};

nlohmann::json to_json(const ModelConfig& config);
/// Fields present in `j` override `base`.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
nlohmann::json to_json(const EmbeddingLayout& layout);
EmbeddingLayout embedding_layout_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace t2seg
