// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "t2seg/ops.hpp"

namespace t2seg {

/// Shape and behaviour of the segmentation transformer.
struct ModelConfig {
  int d_in = 0;
  int d_model = 768;
  int n_layers = 5;
  int n_heads = 24;
  int d_ffn = 1024;
  int max_len = 150;
  int num_topics = 2;
  double dropout = 0.1;
  bool use_topic_loss = true;
  bool use_seg_loss = true;
  double boundary_threshold = 0.5;
  double layer_norm_eps = 1e-5;

  void validate() const;
};

template <typename Scalar>
struct EncoderLayerParams {
  Tensor<Scalar> ln1_gain, ln1_bias;
  Tensor<Scalar> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<Scalar> ln2_gain, ln2_bias;
  Tensor<Scalar> w1, b1, w2, b2;
};

template <typename Scalar>
struct NamedTensor {
  std::string name;
  Tensor<Scalar> tensor;
  /// Stored as rank 1 (gains, biases) rather than rank 2.
  bool rank1 = false;
};

/// Every tensor of the encoder stack and both output heads. The positional
/// table is fixed and carries no gradient.
template <typename Scalar>
struct ModelParams {
  Tensor<Scalar> input_weight, input_bias;
  Tensor<Scalar> positional;
  std::vector<EncoderLayerParams<Scalar>> layers;
  Tensor<Scalar> final_gain, final_bias;
  Tensor<Scalar> seg_weight, seg_bias;
  Tensor<Scalar> topic_weight, topic_bias;

  /// All tensors in a fixed order with unique dotted names.
  std::vector<NamedTensor<Scalar>> named() const;
  /// Tensors updated by the optimizer.
  std::vector<Tensor<Scalar>> trainable() const;
  void zero_grad();
  /// Deep copy.
  ModelParams clone() const;

  /// Rebuilds the structure for `config` from named tensors; throws DataError
  /// on missing, extra or mis-shaped entries.
  static ModelParams from_named(const ModelConfig& config, std::vector<NamedTensor<Scalar>> tensors);
};

/// Glorot-uniform weights, zero biases, unit layer-norm gains, sinusoidal
/// positional table. Deterministic in `seed`.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed);

/// sin/cos table of max_len x d_model.
template <typename Scalar>
Matrix<Scalar> sinusoidal_positions(int max_len, int d_model);

template <typename Scalar>
struct ForwardOutput {
  Tensor<Scalar> seg_prob;    // rows x 1
  Tensor<Scalar> topic_prob;  // rows x K
  BatchLayout layout;         // layout.pad marks pad rows
};

struct ForwardOptions {
  bool train = false;
  /// Dropout randomness; required when train is set and dropout > 0.
  std::mt19937_64* rng = nullptr;
};

template <typename Scalar>
using AttentionTrace = std::vector<std::vector<Matrix<Scalar>>>;

/// Multi-head self-attention sublayer of one encoder layer, including the Q,
/// K, V and output projections.
template <typename Scalar>
Tensor<Scalar> multi_head_attention(const Tensor<Scalar>& x, const EncoderLayerParams<Scalar>& layer,
                                    int num_heads, const BatchLayout& layout,
                                    std::vector<Matrix<Scalar>>* weights = nullptr);

/// Runs the encoder over stacked sequences described by `layout`. Each block
/// starts at position 0 of the positional table. When `trace` is given it
/// receives the attention weights of every layer.
template <typename Scalar>
ForwardOutput<Scalar> forward(const Tensor<Scalar>& inputs, const BatchLayout& layout,
                              const ModelParams<Scalar>& params, const ModelConfig& config,
                              const ForwardOptions& options = {}, AttentionTrace<Scalar>* trace = nullptr);

/// Single document; `pad` (optional, one flag per row) marks pad rows.
template <typename Scalar>
ForwardOutput<Scalar> forward(const Matrix<Scalar>& inputs, const ModelParams<Scalar>& params,
                              const ModelConfig& config, const ForwardOptions& options = {},
                              std::vector<bool> pad = {});

/// L = L_seg + L_topic. L_seg is the mean binary cross-entropy over
/// `loss_mask`; L_topic the mean categorical cross-entropy over all non-pad
/// rows. Disabled terms contribute nothing.
template <typename Scalar>
Tensor<Scalar> compute_loss(const ForwardOutput<Scalar>& out, std::span<const int> y_seg,
                            std::span<const int> y_topic, const std::vector<bool>& loss_mask,
                            const ModelConfig& config);

/// boundary[i] = prob[i] >= threshold, with boundary[0] forced to 1.
std::vector<int> predict_boundaries(std::span<const double> seg_prob, double threshold);

/// Boundaries where the argmax topic (lowest index on ties) changes.
std::vector<int> derive_boundaries_from_topics(const Matrix<double>& topic_prob);

/// Argmax per row, lowest index on ties.
std::vector<int> argmax_rows(const Matrix<double>& prob);

struct DocumentPrediction {
  std::vector<double> seg_prob;
  Matrix<double> topic_prob;
  std::vector<int> boundaries;
  std::vector<int> topics;
};

/// Inference over whole documents (each at most max_len rows). Boundaries
/// come from the seg head, or from topic changes when the seg loss is off.
template <typename Scalar>
std::vector<DocumentPrediction> predict(const ModelParams<Scalar>& params, const ModelConfig& config,
                                        std::span<const Matrix<float>> documents,
                                        std::optional<double> threshold = std::nullopt);

}  // namespace t2seg
