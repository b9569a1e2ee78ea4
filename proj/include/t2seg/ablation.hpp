// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "t2seg/dataio.hpp"
#include "t2seg/trainer.hpp"

namespace t2seg {

/// One configuration of the component ablation grid.
struct AblationVariant {
  std::string key;    // "full", "no-single", ...
  std::string label;  // row label in the Markdown table
  bool use_single = true;
  bool use_pairwise = true;
  bool use_topic_loss = true;
  bool use_seg_loss = true;
};

/// full, without S_single, without S_pairwise, without L_topic, without L_seg.
std::vector<AblationVariant> ablation_variants();

struct AblationRow {
  AblationVariant variant;
  EvalReport test;
  int best_epoch = 0;
  int epochs_run = 0;
};

/// Trains and evaluates every variant on the same split. Both providers must
/// be given; variants drop one of them as required.
std::vector<AblationRow> run_ablation(const dataio::CorpusSplit& split, const EmbeddingProvider& single,
                                      const EmbeddingProvider& pairwise, const ModelConfig& base_model,
                                      const TrainConfig& train_config, std::optional<int> oov_id = std::nullopt,
                                      const std::function<void(const AblationVariant&, const EpochRecord&)>& on_epoch = {});

/// Markdown table (Pk in percent, one decimal) preceded by a banner line.
std::string ablation_markdown(const std::vector<AblationRow>& rows, const std::string& corpus_name);

}  // namespace t2seg
