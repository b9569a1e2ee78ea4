// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/checkpoint.hpp"

#include <limits>

#include "t2seg/io.hpp"

namespace t2seg {

using nlohmann::json;

json to_json(const ModelConfig& c) {
  return json{{"d_in", c.d_in},
              {"d_model", c.d_model},
              {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},
              {"d_ffn", c.d_ffn},
              {"max_len", c.max_len},
              {"num_topics", c.num_topics},
              {"dropout", c.dropout},
              {"use_topic_loss", c.use_topic_loss},
              {"use_seg_loss", c.use_seg_loss},
              {"boundary_threshold", c.boundary_threshold},
              {"layer_norm_eps", c.layer_norm_eps}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  if (!j.is_object()) throw ConfigError("model config: expected a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "d_in") c.d_in = it->get<int>();
      else if (k == "d_model") c.d_model = it->get<int>();
      else if (k == "n_layers") c.n_layers = it->get<int>();
      else if (k == "n_heads") c.n_heads = it->get<int>();
      else if (k == "d_ffn") c.d_ffn = it->get<int>();
      else if (k == "max_len") c.max_len = it->get<int>();
      else if (k == "num_topics") c.num_topics = it->get<int>();
      else if (k == "dropout") c.dropout = it->get<double>();
      else if (k == "use_topic_loss") c.use_topic_loss = it->get<bool>();
      else if (k == "use_seg_loss") c.use_seg_loss = it->get<bool>();
      else if (k == "boundary_threshold") c.boundary_threshold = it->get<double>();
      else if (k == "layer_norm_eps") c.layer_norm_eps = it->get<double>();
      else throw ConfigError("model config: unknown field '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

json to_json(const EmbeddingLayout& layout) {
  return json{{"single_dim", layout.single_dim},
              {"pairwise_dim", layout.pairwise_dim},
              {"order", json::array({"single", "pairwise"})}};
}

EmbeddingLayout embedding_layout_from_json(const json& j) {
  EmbeddingLayout l;
  l.single_dim = j.at("single_dim").get<int>();
  l.pairwise_dim = j.at("pairwise_dim").get<int>();
  if (j.contains("order") && j["order"] != json::array({"single", "pairwise"})) {
    throw DataError("embedding layout: unsupported column order " + j["order"].dump());
  }
  return l;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header{{"config", to_json(ckpt.config)},
              {"vocabulary", json{{"labels", ckpt.vocab.labels()}}},
              {"embedding_layout", to_json(ckpt.layout)},
              {"training", ckpt.training}};
  const std::string text = header.dump();
  io::ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 8));
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (const auto& nt : ckpt.params.named()) {
    w.u16(static_cast<std::uint16_t>(nt.name.size()));
    w.bytes(nt.name);
    const auto& m = nt.tensor.value();
    if (nt.rank1) {
      w.u8(1);
      w.u32(static_cast<std::uint32_t>(m.size()));
    } else {
      w.u8(2);
      w.u32(static_cast<std::uint32_t>(m.rows()));
      w.u32(static_cast<std::uint32_t>(m.cols()));
    }
    for (Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  }
  return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  io::ByteReader r(bytes);
  auto truncated = [] { return DataError("checkpoint: truncated file"); };
  std::string_view magic;
  if (!r.try_take(8, magic)) throw truncated();
  if (magic != std::string_view(kCheckpointMagic, 8)) throw DataError("checkpoint: bad magic");
  std::uint32_t len = 0;
  std::string_view text;
  if (!r.try_u32(len) || !r.try_take(len, text)) throw truncated();
  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.config = model_config_from_json(header.at("config"));
    ckpt.vocab = TopicVocabulary(header.at("vocabulary").at("labels").get<std::vector<std::string>>());
    ckpt.layout = embedding_layout_from_json(header.at("embedding_layout"));
    if (header.contains("training")) ckpt.training = header["training"];
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  ckpt.config.validate();
  if (ckpt.layout.width() != ckpt.config.d_in) {
    throw DataError("checkpoint: embedding layout width " + std::to_string(ckpt.layout.width()) +
                    " differs from d_in " + std::to_string(ckpt.config.d_in));
  }
  std::vector<NamedTensor<float>> tensors;
  while (!r.at_end()) {
    std::uint16_t name_len = 0;
    std::string_view name;
    std::uint8_t rank = 0;
    if (!r.try_u16(name_len) || !r.try_take(name_len, name) || !r.try_u8(rank)) throw truncated();
    if (rank != 1 && rank != 2) throw DataError("checkpoint: tensor '" + std::string(name) + "' has rank " +
                                                std::to_string(rank));
    std::uint32_t rows = 1, cols = 0;
    if (rank == 1) {
      if (!r.try_u32(cols)) throw truncated();
    } else if (!r.try_u32(rows) || !r.try_u32(cols)) {
      throw truncated();
    }
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (r.remaining() / 4 < count) throw truncated();
    Matrix<float> m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) r.try_f32(m.data()[i]);
    if (!m.allFinite()) throw DataError("checkpoint: tensor '" + std::string(name) + "' holds non-finite values");
    tensors.push_back({std::string(name), Tensor<float>(std::move(m)), rank == 1});
  }
  ckpt.params = ModelParams<float>::from_named(ckpt.config, std::move(tensors));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return parse_checkpoint(io::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace t2seg
