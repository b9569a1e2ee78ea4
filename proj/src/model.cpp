// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/model.hpp"

#include <cmath>
#include <map>

namespace t2seg {

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw ConfigError("model config: " + why); };
  if (d_in <= 0) fail("d_in must be positive");
  if (d_model < 2) fail("d_model must be at least 2");
  if (n_layers < 1) fail("n_layers must be at least 1");
  if (n_heads < 1 || d_model % n_heads != 0) {
    fail("d_model " + std::to_string(d_model) + " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (d_ffn < 1) fail("d_ffn must be positive");
  if (max_len < 1) fail("max_len must be positive");
  if (num_topics < 1 || (use_topic_loss && num_topics < 2)) fail("need at least 2 topics for the topic loss");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!use_topic_loss && !use_seg_loss) fail("at least one loss must be enabled");
  if (!(layer_norm_eps > 0.0)) fail("layer_norm_eps must be positive");
}

namespace {

enum class Init { kWeight, kZero, kOne, kPositional };

struct Slot {
  Index rows;
  Index cols;
  Init init;
};

// Visits every tensor slot of `p` in canonical order with its expected shape.
template <typename P, typename F>
void visit_slots(P& p, const ModelConfig& c, F&& f) {
  const Index dm = c.d_model;
  f("input.weight", p.input_weight, Slot{c.d_in, dm, Init::kWeight}, false);
  f("input.bias", p.input_bias, Slot{1, dm, Init::kZero}, true);
  f("positional", p.positional, Slot{c.max_len, dm, Init::kPositional}, false);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& L = p.layers[l];
    const std::string pre = "layers." + std::to_string(l) + ".";
    f(pre + "ln1.gain", L.ln1_gain, Slot{1, dm, Init::kOne}, true);
    f(pre + "ln1.bias", L.ln1_bias, Slot{1, dm, Init::kZero}, true);
    f(pre + "attn.q.weight", L.wq, Slot{dm, dm, Init::kWeight}, false);
    f(pre + "attn.q.bias", L.bq, Slot{1, dm, Init::kZero}, true);
    f(pre + "attn.k.weight", L.wk, Slot{dm, dm, Init::kWeight}, false);
    f(pre + "attn.k.bias", L.bk, Slot{1, dm, Init::kZero}, true);
    f(pre + "attn.v.weight", L.wv, Slot{dm, dm, Init::kWeight}, false);
    f(pre + "attn.v.bias", L.bv, Slot{1, dm, Init::kZero}, true);
    f(pre + "attn.o.weight", L.wo, Slot{dm, dm, Init::kWeight}, false);
    f(pre + "attn.o.bias", L.bo, Slot{1, dm, Init::kZero}, true);
    f(pre + "ln2.gain", L.ln2_gain, Slot{1, dm, Init::kOne}, true);
    f(pre + "ln2.bias", L.ln2_bias, Slot{1, dm, Init::kZero}, true);
    f(pre + "ffn.in.weight", L.w1, Slot{dm, c.d_ffn, Init::kWeight}, false);
    f(pre + "ffn.in.bias", L.b1, Slot{1, c.d_ffn, Init::kZero}, true);
    f(pre + "ffn.out.weight", L.w2, Slot{c.d_ffn, dm, Init::kWeight}, false);
    f(pre + "ffn.out.bias", L.b2, Slot{1, dm, Init::kZero}, true);
  }
  f("final_norm.gain", p.final_gain, Slot{1, dm, Init::kOne}, true);
  f("final_norm.bias", p.final_bias, Slot{1, dm, Init::kZero}, true);
  f("seg_head.weight", p.seg_weight, Slot{dm, 1, Init::kWeight}, false);
  f("seg_head.bias", p.seg_bias, Slot{1, 1, Init::kZero}, true);
  f("topic_head.weight", p.topic_weight, Slot{dm, c.num_topics, Init::kWeight}, false);
  f("topic_head.bias", p.topic_bias, Slot{1, c.num_topics, Init::kZero}, true);
}

// Recovers the config-dependent shapes needed to walk the slots of an
// existing parameter set.
template <typename Scalar>
ModelConfig shape_config(const ModelParams<Scalar>& p) {
  ModelConfig c;
  c.d_in = static_cast<int>(p.input_weight.rows());
  c.d_model = static_cast<int>(p.input_weight.cols());
  c.max_len = static_cast<int>(p.positional.rows());
  c.d_ffn = p.layers.empty() ? 1 : static_cast<int>(p.layers[0].w1.cols());
  c.num_topics = static_cast<int>(p.topic_weight.cols());
  return c;
}

}  // namespace

template <typename Scalar>
Matrix<Scalar> sinusoidal_positions(int max_len, int d_model) {
  Matrix<Scalar> pe(max_len, d_model);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d_model);
      const double angle = pos * freq;
      pe(pos, i) = static_cast<Scalar>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename Scalar>
std::vector<NamedTensor<Scalar>> ModelParams<Scalar>::named() const {
  std::vector<NamedTensor<Scalar>> out;
  auto& self = const_cast<ModelParams&>(*this);
  visit_slots(self, shape_config(*this), [&](const std::string& name, Tensor<Scalar>& t, Slot, bool rank1) {
    out.push_back({name, t, rank1});
  });
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>> ModelParams<Scalar>::trainable() const {
  std::vector<Tensor<Scalar>> out;
  for (auto& nt : named()) {
    if (nt.tensor.requires_grad()) out.push_back(nt.tensor);
  }
  return out;
}

template <typename Scalar>
void ModelParams<Scalar>::zero_grad() {
  for (auto& t : trainable()) t.zero_grad();
}

template <typename Scalar>
ModelParams<Scalar> ModelParams<Scalar>::clone() const {
  ModelParams copy = *this;
  visit_slots(copy, shape_config(*this), [](const std::string&, Tensor<Scalar>& t, Slot, bool) { t = t.clone(); });
  return copy;
}

template <typename Scalar>
ModelParams<Scalar> ModelParams<Scalar>::from_named(const ModelConfig& config,
                                                    std::vector<NamedTensor<Scalar>> tensors) {
  config.validate();
  std::map<std::string, Tensor<Scalar>> by_name;
  for (auto& nt : tensors) {
    if (!by_name.emplace(nt.name, nt.tensor).second) throw DataError("parameters: duplicate tensor '" + nt.name + "'");
  }
  ModelParams p;
  p.layers.resize(static_cast<std::size_t>(config.n_layers));
  visit_slots(p, config, [&](const std::string& name, Tensor<Scalar>& t, Slot s, bool) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("parameters: missing tensor '" + name + "'");
    if (it->second.rows() != s.rows || it->second.cols() != s.cols) {
      throw DataError("parameters: tensor '" + name + "' has shape " + it->second.shape_str() + ", expected " +
                      shape_string(s.rows, s.cols));
    }
    t = Tensor<Scalar>(it->second.value(), s.init != Init::kPositional);
    by_name.erase(it);
  });
  if (!by_name.empty()) throw DataError("parameters: unexpected tensor '" + by_name.begin()->first + "'");
  return p;
}

template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams<Scalar> p;
  p.layers.resize(static_cast<std::size_t>(config.n_layers));
  visit_slots(p, config, [&](const std::string&, Tensor<Scalar>& t, Slot s, bool) {
    Matrix<Scalar> m;
    switch (s.init) {
      case Init::kWeight: {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        m.resize(s.rows, s.cols);
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
        break;
      }
      case Init::kZero:
        m = Matrix<Scalar>::Zero(s.rows, s.cols);
        break;
      case Init::kOne:
        m = Matrix<Scalar>::Ones(s.rows, s.cols);
        break;
      case Init::kPositional:
        m = sinusoidal_positions<Scalar>(config.max_len, config.d_model);
        break;
    }
    t = Tensor<Scalar>(std::move(m), s.init != Init::kPositional);
  });
  return p;
}

template <typename Scalar>
Tensor<Scalar> multi_head_attention(const Tensor<Scalar>& x, const EncoderLayerParams<Scalar>& layer,
                                    int num_heads, const BatchLayout& layout,
                                    std::vector<Matrix<Scalar>>* weights) {
  const Tensor<Scalar> q = linear(x, layer.wq, layer.bq);
  const Tensor<Scalar> k = linear(x, layer.wk, layer.bk);
  const Tensor<Scalar> v = linear(x, layer.wv, layer.bv);
  return linear(attention(q, k, v, num_heads, layout, weights), layer.wo, layer.bo);
}

template <typename Scalar>
ForwardOutput<Scalar> forward(const Tensor<Scalar>& inputs, const BatchLayout& layout,
                              const ModelParams<Scalar>& params, const ModelConfig& config,
                              const ForwardOptions& options, AttentionTrace<Scalar>* trace) {
  if (inputs.cols() != config.d_in) {
    throw DimensionError("forward: embedding width " + std::to_string(inputs.cols()) + " but model expects " +
                         std::to_string(config.d_in));
  }
  if (layout.rows() != inputs.rows()) {
    throw DimensionError("forward: layout covers " + std::to_string(layout.rows()) + " rows, input has " +
                         std::to_string(inputs.rows()));
  }
  Matrix<Scalar> positions(inputs.rows(), config.d_model);
  for (const auto& b : layout.blocks) {
    if (b.length < 1) throw ContractError("forward: empty sequence");
    if (b.length > config.max_len) {
      throw ContractError("forward: sequence of " + std::to_string(b.length) + " rows exceeds max_len " +
                          std::to_string(config.max_len));
    }
    positions.middleRows(b.offset, b.length) = params.positional.value().topRows(b.length);
  }
  const bool drop = options.train && config.dropout > 0.0;
  if (drop && options.rng == nullptr) throw ContractError("forward: train mode with dropout needs an rng");
  std::mt19937_64 unused;
  std::mt19937_64& rng = options.rng ? *options.rng : unused;
  const auto eps = static_cast<Scalar>(config.layer_norm_eps);

  // Rows are scaled by 2/sqrt(d_in). Much larger inputs drown the positional
  // signal after projection; much smaller ones train far slower.
  const Tensor<Scalar> scaled = scale(inputs, static_cast<Scalar>(2.0 / std::sqrt(static_cast<double>(config.d_in))));
  Tensor<Scalar> h = linear(scaled, params.input_weight, params.input_bias) + Tensor<Scalar>(std::move(positions));
  h = dropout(h, config.dropout, rng, drop);
  if (trace) trace->clear();
  for (const auto& layer : params.layers) {
    std::vector<Matrix<Scalar>>* weights = nullptr;
    if (trace) weights = &trace->emplace_back();
    Tensor<Scalar> a = layer_norm(h, layer.ln1_gain, layer.ln1_bias, eps);
    a = multi_head_attention(a, layer, config.n_heads, layout, weights);
    h = h + dropout(a, config.dropout, rng, drop);
    Tensor<Scalar> f = layer_norm(h, layer.ln2_gain, layer.ln2_bias, eps);
    f = linear(gelu(linear(f, layer.w1, layer.b1)), layer.w2, layer.b2);
    h = h + dropout(f, config.dropout, rng, drop);
  }
  h = layer_norm(h, params.final_gain, params.final_bias, eps);
  ForwardOutput<Scalar> out;
  out.seg_prob = sigmoid(linear(h, params.seg_weight, params.seg_bias));
  out.topic_prob = softmax(linear(h, params.topic_weight, params.topic_bias));
  out.layout = layout;
  return out;
}

template <typename Scalar>
ForwardOutput<Scalar> forward(const Matrix<Scalar>& inputs, const ModelParams<Scalar>& params,
                              const ModelConfig& config, const ForwardOptions& options, std::vector<bool> pad) {
  BatchLayout layout = BatchLayout::single(inputs.rows());
  if (!pad.empty()) {
    if (pad.size() != static_cast<std::size_t>(inputs.rows())) {
      throw DimensionError("forward: pad mask has " + std::to_string(pad.size()) + " entries for " +
                           std::to_string(inputs.rows()) + " rows");
    }
    layout.pad = std::move(pad);
  }
  return forward(Tensor<Scalar>(inputs), layout, params, config, options);
}

template <typename Scalar>
Tensor<Scalar> compute_loss(const ForwardOutput<Scalar>& out, std::span<const int> y_seg,
                            std::span<const int> y_topic, const std::vector<bool>& loss_mask,
                            const ModelConfig& config) {
  const auto n = static_cast<std::size_t>(out.seg_prob.rows());
  if (y_seg.size() != n || y_topic.size() != n || loss_mask.size() != n) {
    throw DimensionError("compute_loss: " + std::to_string(n) + " rows but " + std::to_string(y_seg.size()) +
                         " seg labels, " + std::to_string(y_topic.size()) + " topic labels, " +
                         std::to_string(loss_mask.size()) + " mask entries");
  }
  std::vector<bool> non_pad(n);
  for (std::size_t i = 0; i < n; ++i) {
    non_pad[i] = !out.layout.pad[i];
    if (loss_mask[i] && out.layout.pad[i]) throw ContractError("compute_loss: loss mask includes a pad row");
  }
  Tensor<Scalar> total;
  if (config.use_seg_loss) {
    if (std::find(loss_mask.begin(), loss_mask.end(), true) == loss_mask.end()) {
      throw ContractError("compute_loss: empty loss mask with the segmentation loss enabled");
    }
    total = binary_cross_entropy(out.seg_prob, y_seg, loss_mask);
  }
  if (config.use_topic_loss) {
    Tensor<Scalar> topic = categorical_cross_entropy(out.topic_prob, y_topic, non_pad);
    total = total.defined() ? total + topic : topic;
  }
  return total;
}

std::vector<int> predict_boundaries(std::span<const double> seg_prob, double threshold) {
  if (seg_prob.empty()) throw ContractError("predict_boundaries: empty input");
  std::vector<int> out(seg_prob.size());
  for (std::size_t i = 0; i < seg_prob.size(); ++i) out[i] = seg_prob[i] >= threshold ? 1 : 0;
  out[0] = 1;
  return out;
}

std::vector<int> argmax_rows(const Matrix<double>& prob) {
  std::vector<int> out(static_cast<std::size_t>(prob.rows()));
  for (Index r = 0; r < prob.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < prob.cols(); ++c) {
      if (prob(r, c) > prob(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> derive_boundaries_from_topics(const Matrix<double>& topic_prob) {
  if (topic_prob.rows() == 0) throw ContractError("derive_boundaries_from_topics: empty input");
  const auto labels = argmax_rows(topic_prob);
  std::vector<int> out(labels.size(), 0);
  out[0] = 1;
  for (std::size_t i = 1; i < labels.size(); ++i) out[i] = labels[i] != labels[i - 1] ? 1 : 0;
  return out;
}

template <typename Scalar>
std::vector<DocumentPrediction> predict(const ModelParams<Scalar>& params, const ModelConfig& config,
                                        std::span<const Matrix<float>> documents, std::optional<double> threshold) {
  std::vector<DocumentPrediction> preds;
  if (documents.empty()) return preds;
  // Bounded stacks keep the attention probabilities and activations small.
  constexpr Index kMaxRows = 2048;
  std::size_t first = 0;
  while (first < documents.size()) {
    BatchLayout layout;
    Index rows = 0;
    std::size_t last = first;
    while (last < documents.size() && (last == first || rows + documents[last].rows() <= kMaxRows)) {
      if (documents[last].rows() == 0) throw ContractError("predict: empty document");
      layout.blocks.push_back({rows, documents[last].rows()});
      rows += documents[last].rows();
      ++last;
    }
    layout.pad.assign(static_cast<std::size_t>(rows), false);
    Matrix<Scalar> stacked(rows, config.d_in);
    for (std::size_t d = first; d < last; ++d) {
      if (documents[d].cols() != config.d_in) {
        throw DimensionError("predict: embedding width " + std::to_string(documents[d].cols()) +
                             " but model expects " + std::to_string(config.d_in));
      }
      stacked.middleRows(layout.blocks[d - first].offset, documents[d].rows()) = documents[d].template cast<Scalar>();
    }
    const auto out = forward(Tensor<Scalar>(std::move(stacked)), layout, params, config);
    for (std::size_t d = first; d < last; ++d) {
      const auto& b = layout.blocks[d - first];
      DocumentPrediction p;
      p.seg_prob.resize(static_cast<std::size_t>(b.length));
      for (Index i = 0; i < b.length; ++i) {
        p.seg_prob[static_cast<std::size_t>(i)] = static_cast<double>(out.seg_prob.value()(b.offset + i, 0));
      }
      p.topic_prob = out.topic_prob.value().middleRows(b.offset, b.length).template cast<double>();
      p.topics = argmax_rows(p.topic_prob);
      p.boundaries = config.use_seg_loss
                         ? predict_boundaries(p.seg_prob, threshold.value_or(config.boundary_threshold))
                         : derive_boundaries_from_topics(p.topic_prob);
      preds.push_back(std::move(p));
    }
    first = last;
  }
  return preds;
}

#define T2SEG_INSTANTIATE(S)                                                                                   \
  template struct ModelParams<S>;                                                                              \
  template Matrix<S> sinusoidal_positions<S>(int, int);                                                        \
  template ModelParams<S> init_params<S>(const ModelConfig&, std::uint64_t);                                   \
  template Tensor<S> multi_head_attention<S>(const Tensor<S>&, const EncoderLayerParams<S>&, int,              \
                                             const BatchLayout&, std::vector<Matrix<S>>*);                     \
  template ForwardOutput<S> forward<S>(const Tensor<S>&, const BatchLayout&, const ModelParams<S>&,            \
                                       const ModelConfig&, const ForwardOptions&, AttentionTrace<S>*);         \
  template ForwardOutput<S> forward<S>(const Matrix<S>&, const ModelParams<S>&, const ModelConfig&,            \
                                       const ForwardOptions&, std::vector<bool>);                              \
  template Tensor<S> compute_loss<S>(const ForwardOutput<S>&, std::span<const int>, std::span<const int>,      \
                                     const std::vector<bool>&, const ModelConfig&);                            \
  template std::vector<DocumentPrediction> predict<S>(const ModelParams<S>&, const ModelConfig&,               \
                                                      std::span<const Matrix<float>>, std::optional<double>);

T2SEG_INSTANTIATE(float)
T2SEG_INSTANTIATE(double)

#undef T2SEG_INSTANTIATE

}  // namespace t2seg
