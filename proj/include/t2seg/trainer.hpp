// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "t2seg/embedding.hpp"
#include "t2seg/model.hpp"

namespace t2seg {

struct TrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  int max_epochs = 30;
  int patience = 5;
  double mask_rate = 0.7;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Adam moments per parameter and the step counter.
template <typename Scalar>
struct OptimizerState {
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of `params` from their accumulated
/// gradients. `names`, when given, labels tensors in error messages.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>> params, OptimizerState<Scalar>& state, const TrainConfig& config,
               std::span<const std::string> names = {});

/// Rescales all gradients so their joint L2 norm is at most `max_norm`;
/// returns the norm before clipping.
template <typename Scalar>
double clip_gradients(std::span<Tensor<Scalar>> params, double max_norm);

/// Keeps every boundary sentence and each inner sentence with probability
/// 1 - mask_rate. Pad rows (when `pad` is non-empty) are never kept.
std::vector<bool> sample_loss_mask(std::span<const int> y_seg, double mask_rate, std::mt19937_64& rng,
                                   const std::vector<bool>& pad = {});

/// A document truncated to the model's maximum length with its composed
/// embedding matrix.
struct PreparedDocument {
  std::string id;
  Matrix<float> embeddings;
  std::vector<int> boundaries;
  std::vector<int> topics;

  std::size_t size() const { return boundaries.size(); }
};

std::vector<PreparedDocument> prepare_documents(const std::vector<Document>& docs, const EmbeddingProvider* single,
                                                const EmbeddingProvider* pairwise, std::size_t cap);

struct DocumentScore {
  std::string id;
  int n = 0;
  int k = 0;
  double pk = 0.0;
};

struct EvalReport {
  double corpus_pk = 0.0;
  std::vector<DocumentScore> docs;
  double topic_accuracy = 0.0;
  std::size_t topic_positions = 0;

  nlohmann::json to_json() const;
};

/// Scores given predictions. Documents shorter than 2 sentences count toward
/// topic accuracy only; positions labelled `oov_id` are excluded from it.
EvalReport evaluate_predictions(std::span<const PreparedDocument> docs, std::span<const DocumentPrediction> preds,
                                std::optional<int> oov_id = std::nullopt);

EvalReport evaluate_model(const ModelParams<float>& params, const ModelConfig& config,
                          std::span<const PreparedDocument> docs, std::optional<int> oov_id = std::nullopt,
                          std::optional<double> threshold = std::nullopt);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_pk = 0.0;
  double val_topic_accuracy = 0.0;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called after every optimizer step with the batch loss; returning false
  /// stops training.
  std::function<bool(std::int64_t step, double loss)> on_step;
};

struct TrainResult {
  ModelParams<float> best_params;
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_pk = 1.0;
  std::vector<double> step_losses;
};

/// Adam over shuffled document batches with per-epoch loss-mask resampling,
/// validation Pk after each epoch and early stopping on it.
TrainResult train(std::span<const PreparedDocument> train_docs, std::span<const PreparedDocument> val_docs,
                  const ModelConfig& model_config, const TrainConfig& train_config, const TrainHooks& hooks = {});

}  // namespace t2seg
