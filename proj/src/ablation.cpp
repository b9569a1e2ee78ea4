// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/ablation.hpp"

#include <cstdio>

namespace t2seg {

std::vector<AblationVariant> ablation_variants() {
  return {
      {"full", "full model", true, true, true, true},
      {"no-single", "without S_single", false, true, true, true},
      {"no-pairwise", "without S_pairwise", true, false, true, true},
      {"no-topic-loss", "without L_topic", true, true, false, true},
      {"no-seg-loss", "without L_seg (topic-change boundaries)", true, true, true, false},
  };
}

std::vector<AblationRow> run_ablation(const dataio::CorpusSplit& split, const EmbeddingProvider& single,
                                      const EmbeddingProvider& pairwise, const ModelConfig& base_model,
                                      const TrainConfig& train_config, std::optional<int> oov_id,
                                      const std::function<void(const AblationVariant&, const EpochRecord&)>& on_epoch) {
  std::vector<AblationRow> rows;
  const auto cap = static_cast<std::size_t>(base_model.max_len);
  for (const auto& variant : ablation_variants()) {
    const EmbeddingProvider* s = variant.use_single ? &single : nullptr;
    const EmbeddingProvider* p = variant.use_pairwise ? &pairwise : nullptr;
    ModelConfig cfg = base_model;
    cfg.d_in = layout_of(s, p).width();
    cfg.use_topic_loss = variant.use_topic_loss;
    cfg.use_seg_loss = variant.use_seg_loss;
    const auto train_docs = prepare_documents(split.train, s, p, cap);
    const auto val_docs = prepare_documents(split.validation, s, p, cap);
    const auto test_docs = prepare_documents(split.test, s, p, cap);
    TrainHooks hooks;
    if (on_epoch) hooks.on_epoch = [&](const EpochRecord& r) { on_epoch(variant, r); };
    TrainResult result = train(train_docs, val_docs, cfg, train_config, hooks);
    AblationRow row;
    row.variant = variant;
    row.test = evaluate_model(result.best_params, cfg, test_docs, oov_id);
    row.best_epoch = result.best_epoch;
    row.epochs_run = static_cast<int>(result.log.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_markdown(const std::vector<AblationRow>& rows, const std::string& corpus_name) {
  std::string md;
  md += "> Desk-scale ablation on `" + corpus_name +
        "`: values come from this run and are not comparable to published full-corpus results.\n\n";
  md += "| model | Pk (%) | topic accuracy (%) | best epoch |\n";
  md += "|---|---:|---:|---:|\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "| %s | %.1f | %.1f | %d |\n", r.variant.label.c_str(), 100.0 * r.test.corpus_pk,
                  100.0 * r.test.topic_accuracy, r.best_epoch);
    md += buf;
  }
  return md;
}

}  // namespace t2seg
