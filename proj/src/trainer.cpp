// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "t2seg/metrics.hpp"

namespace t2seg {

using nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& why) { throw ConfigError("train config: " + why); };
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam eps must be positive");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (max_epochs < 1) fail("max_epochs must be at least 1");
  if (patience < 1) fail("patience must be at least 1");
  if (!(mask_rate >= 0.0 && mask_rate < 1.0)) fail("mask_rate must lie in [0, 1)");
  if (!(clip_norm > 0.0)) fail("clip_norm must be positive");
}

json to_json(const TrainConfig& c) {
  return json{{"lr", c.lr},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"mask_rate", c.mask_rate},
              {"clip_norm", c.clip_norm},
              {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "lr") c.lr = it->get<double>();
      else if (k == "beta1") c.beta1 = it->get<double>();
      else if (k == "beta2") c.beta2 = it->get<double>();
      else if (k == "adam_eps") c.adam_eps = it->get<double>();
      else if (k == "batch_size") c.batch_size = it->get<int>();
      else if (k == "max_epochs") c.max_epochs = it->get<int>();
      else if (k == "patience") c.patience = it->get<int>();
      else if (k == "mask_rate") c.mask_rate = it->get<double>();
      else if (k == "clip_norm") c.clip_norm = it->get<double>();
      else if (k == "seed") c.seed = it->get<std::uint64_t>();
      else throw ConfigError("train config: unknown field '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

namespace {

// Single pass over parameters, moments and gradient; the update is memory
// bound, so one sweep beats three array expressions.
template <typename Scalar>
void adam_update(Scalar* __restrict w, Scalar* __restrict m, Scalar* __restrict v, const Scalar* __restrict g,
                 Index n, Scalar b1, Scalar b2, Scalar step, Scalar inv_c2, Scalar eps) {
  for (Index j = 0; j < n; ++j) {
    const Scalar gj = g[j];
    const Scalar mj = b1 * m[j] + (Scalar(1) - b1) * gj;
    const Scalar vj = b2 * v[j] + (Scalar(1) - b2) * gj * gj;
    m[j] = mj;
    v[j] = vj;
    w[j] -= step * mj / (std::sqrt(vj * inv_c2) + eps);
  }
}

// x * 0 is 0 for finite x and NaN otherwise; Eigen vectorizes the sum,
// unlike allFinite().
template <typename Scalar>
bool all_finite(const Matrix<Scalar>& m) {
  return (m.array() * Scalar(0)).sum() == Scalar(0);
}

}  // namespace

template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>> params, OptimizerState<Scalar>& state, const TrainConfig& config,
               std::span<const std::string> names) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw ContractError("adam_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].has_grad() && !all_finite(params[i].mutable_grad())) {
      const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
      throw TrainingError("adam_step: non-finite gradient in tensor " + name);
    }
  }
  ++state.step;
  const auto b1 = static_cast<Scalar>(config.beta1);
  const auto b2 = static_cast<Scalar>(config.beta2);
  const double t = static_cast<double>(state.step);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(config.beta1, t));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(config.beta2, t));
  const auto lr = static_cast<Scalar>(config.lr);
  const auto eps = static_cast<Scalar>(config.adam_eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.has_grad()) continue;
    adam_update(p.mutable_value().data(), state.m[i].data(), state.v[i].data(), p.mutable_grad().data(),
                p.mutable_value().size(), b1, b2, lr / c1, Scalar(1) / c2, eps);
  }
}

template <typename Scalar>
double clip_gradients(std::span<Tensor<Scalar>> params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    if (p.has_grad()) sq += static_cast<double>(p.mutable_grad().squaredNorm());
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const auto s = static_cast<Scalar>(max_norm / norm);
    for (auto& p : params) {
      if (p.has_grad()) p.mutable_grad() *= s;
    }
  }
  return norm;
}

template void adam_step<float>(std::span<Tensor<float>>, OptimizerState<float>&, const TrainConfig&,
                               std::span<const std::string>);
template void adam_step<double>(std::span<Tensor<double>>, OptimizerState<double>&, const TrainConfig&,
                                std::span<const std::string>);
template double clip_gradients<float>(std::span<Tensor<float>>, double);
template double clip_gradients<double>(std::span<Tensor<double>>, double);

std::vector<bool> sample_loss_mask(std::span<const int> y_seg, double mask_rate, std::mt19937_64& rng,
                                   const std::vector<bool>& pad) {
  if (!(mask_rate >= 0.0 && mask_rate < 1.0)) throw ContractError("sample_loss_mask: mask_rate must lie in [0, 1)");
  if (!pad.empty() && pad.size() != y_seg.size()) throw DimensionError("sample_loss_mask: pad length differs");
  std::bernoulli_distribution keep(1.0 - mask_rate);
  std::vector<bool> mask(y_seg.size());
  for (std::size_t i = 0; i < y_seg.size(); ++i) {
    if (!pad.empty() && pad[i]) continue;
    mask[i] = y_seg[i] == 1 || keep(rng);
  }
  return mask;
}

std::vector<PreparedDocument> prepare_documents(const std::vector<Document>& docs, const EmbeddingProvider* single,
                                                const EmbeddingProvider* pairwise, std::size_t cap) {
  std::vector<PreparedDocument> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    const Document d = doc.truncated(cap);
    auto m = compose_document_matrix(doc, single, pairwise, cap);
    out.push_back({d.id, std::move(m.values), d.boundaries, d.topics});
  }
  return out;
}

json EvalReport::to_json() const {
  json docs_json = json::array();
  for (const auto& d : docs) docs_json.push_back({{"id", d.id}, {"n", d.n}, {"k", d.k}, {"pk", d.pk}});
  return json{{"corpus_pk", corpus_pk}, {"docs", docs_json}, {"topic_accuracy", topic_accuracy}};
}

EvalReport evaluate_predictions(std::span<const PreparedDocument> docs, std::span<const DocumentPrediction> preds,
                                std::optional<int> oov_id) {
  if (docs.size() != preds.size()) throw ContractError("evaluate: prediction count differs from document count");
  EvalReport report;
  std::vector<metrics::DocumentPair> pairs;
  std::size_t correct = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    const auto& p = preds[d];
    if (p.boundaries.size() != doc.size() || p.topics.size() != doc.size()) {
      throw DimensionError("evaluate: prediction for '" + doc.id + "' has the wrong length");
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (oov_id && doc.topics[i] == *oov_id) continue;
      ++report.topic_positions;
      correct += p.topics[i] == doc.topics[i] ? 1 : 0;
    }
    if (doc.size() < 2) continue;
    metrics::Segmentation ref{doc.boundaries};
    metrics::Segmentation hyp{p.boundaries};
    const int k = metrics::compute_k(ref);
    const double pk = metrics::pk_document(ref, hyp, k);
    report.docs.push_back({doc.id, static_cast<int>(doc.size()), k, pk});
    pairs.push_back({std::move(ref), std::move(hyp)});
  }
  if (pairs.empty()) throw ContractError("evaluate: no document with at least 2 sentences");
  report.corpus_pk = metrics::pk_corpus(pairs);
  report.topic_accuracy =
      report.topic_positions == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(report.topic_positions);
  return report;
}

EvalReport evaluate_model(const ModelParams<float>& params, const ModelConfig& config,
                          std::span<const PreparedDocument> docs, std::optional<int> oov_id,
                          std::optional<double> threshold) {
  std::vector<Matrix<float>> inputs;
  inputs.reserve(docs.size());
  for (const auto& d : docs) inputs.push_back(d.embeddings);
  const auto preds = predict(params, config, std::span<const Matrix<float>>(inputs), threshold);
  return evaluate_predictions(docs, preds, oov_id);
}

json EpochRecord::to_json() const {
  return json{{"epoch", epoch},
              {"train_loss", train_loss},
              {"val_pk", val_pk},
              {"val_topic_accuracy", val_topic_accuracy},
              {"seconds", seconds}};
}

namespace {

struct Batch {
  Tensor<float> inputs;
  BatchLayout layout;
  std::vector<int> y_seg;
  std::vector<int> y_topic;
  std::vector<bool> loss_mask;
};

Batch assemble(std::span<const PreparedDocument> docs, std::span<const std::size_t> members, int d_in,
               double mask_rate, std::mt19937_64& mask_rng) {
  Batch b;
  Index rows = 0;
  for (std::size_t idx : members) rows += static_cast<Index>(docs[idx].size());
  Matrix<float> stacked(rows, d_in);
  Index offset = 0;
  for (std::size_t idx : members) {
    const auto& doc = docs[idx];
    const auto n = static_cast<Index>(doc.size());
    stacked.middleRows(offset, n) = doc.embeddings;
    b.layout.blocks.push_back({offset, n});
    b.y_seg.insert(b.y_seg.end(), doc.boundaries.begin(), doc.boundaries.end());
    b.y_topic.insert(b.y_topic.end(), doc.topics.begin(), doc.topics.end());
    const auto mask = sample_loss_mask(doc.boundaries, mask_rate, mask_rng);
    b.loss_mask.insert(b.loss_mask.end(), mask.begin(), mask.end());
    offset += n;
  }
  b.layout.pad.assign(static_cast<std::size_t>(rows), false);
  b.inputs = Tensor<float>(std::move(stacked));
  return b;
}

}  // namespace

TrainResult train(std::span<const PreparedDocument> train_docs, std::span<const PreparedDocument> val_docs,
                  const ModelConfig& model_config, const TrainConfig& train_config, const TrainHooks& hooks) {
  model_config.validate();
  train_config.validate();
  if (train_docs.empty()) throw ConfigError("train: empty training split");
  if (val_docs.empty()) throw ConfigError("train: empty validation split");
  for (auto docs : {train_docs, val_docs}) {
    for (const auto& d : docs) {
      if (d.size() == 0 || d.embeddings.rows() != static_cast<Index>(d.size())) {
        throw DataError("train: document '" + d.id + "' has inconsistent embeddings");
      }
      if (d.embeddings.cols() != model_config.d_in) {
        throw DimensionError("train: document '" + d.id + "' has embedding width " +
                             std::to_string(d.embeddings.cols()) + ", model expects " +
                             std::to_string(model_config.d_in));
      }
      if (static_cast<int>(d.size()) > model_config.max_len) {
        throw ContractError("train: document '" + d.id + "' exceeds max_len; prepare_documents truncates");
      }
      for (int t : d.topics) {
        if (t < 0 || t >= model_config.num_topics) {
          throw DataError("train: document '" + d.id + "' has topic " + std::to_string(t) + " outside [0," +
                          std::to_string(model_config.num_topics) + ")");
        }
      }
    }
  }

  std::seed_seq seq{train_config.seed, std::uint64_t{0x7432736567}};
  std::array<std::uint64_t, 4> seeds{};
  seq.generate(seeds.begin(), seeds.end());
  std::mt19937_64 shuffle_rng(seeds[0]);
  std::mt19937_64 mask_rng(seeds[1]);
  std::mt19937_64 dropout_rng(seeds[2]);

  TrainResult result;
  ModelParams<float> params = init_params<float>(model_config, seeds[3]);
  std::vector<Tensor<float>> trainable = params.trainable();
  std::vector<std::string> names;
  for (const auto& nt : params.named()) {
    if (nt.tensor.requires_grad()) names.push_back(nt.name);
  }
  OptimizerState<float> opt;
  result.best_params = params.clone();
  result.best_val_pk = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), 0);
  int stale = 0;
  bool stop = false;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= train_config.max_epochs && !stop; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(train_config.batch_size)) {
      const std::size_t count = std::min(order.size() - first, static_cast<std::size_t>(train_config.batch_size));
      Batch batch = assemble(train_docs, std::span<const std::size_t>(order).subspan(first, count),
                             model_config.d_in, train_config.mask_rate, mask_rng);
      double loss_value = 0.0;
      {
        Graph<float> graph;
        Recording<float> rec(graph);
        ForwardOptions fo{true, &dropout_rng};
        const auto out = forward(batch.inputs, batch.layout, params, model_config, fo);
        const Tensor<float> loss = compute_loss(out, batch.y_seg, batch.y_topic, batch.loss_mask, model_config);
        loss_value = static_cast<double>(loss.item());
        if (!std::isfinite(loss_value)) {
          throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step + 1));
        }
        graph.backward(loss);
      }
      clip_gradients<float>(trainable, train_config.clip_norm);
      adam_step<float>(trainable, opt, train_config, names);
      params.zero_grad();
      ++step;
      ++batches;
      loss_sum += loss_value;
      result.step_losses.push_back(loss_value);
      if (hooks.on_step && !hooks.on_step(step, loss_value)) {
        stop = true;
        break;
      }
    }
    if (stop && batches == 0) break;
    const EvalReport val = evaluate_model(params, model_config, val_docs);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / std::max(1, batches);
    rec.val_pk = val.corpus_pk;
    rec.val_topic_accuracy = val.topic_accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (val.corpus_pk < result.best_val_pk) {
      result.best_val_pk = val.corpus_pk;
      result.best_epoch = epoch;
      result.best_params = params.clone();
      stale = 0;
    } else if (++stale >= train_config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace t2seg
