// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "t2seg/io.hpp"

namespace t2seg {

void Document::validate(std::optional<int> num_topics) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw DataError("document '" + id + "': " + field + ": " + why);
  };
  if (id.empty()) throw DataError("document with empty id");
  const std::size_t n = sentences.size();
  if (n == 0) fail("sentences", "document has no sentences");
  if (boundaries.size() != n) fail("boundaries", "length differs from sentence count");
  if (topics.size() != n) fail("topics", "length differs from sentence count");
  if (boundaries[0] != 1) fail("boundaries", "first sentence must start a segment");
  for (std::size_t i = 0; i < n; ++i) {
    if (boundaries[i] != 0 && boundaries[i] != 1) fail("boundaries", "values must be 0 or 1");
    if (topics[i] < 0) fail("topics", "negative topic id");
    if (num_topics && topics[i] >= *num_topics) {
      fail("topics", "topic id " + std::to_string(topics[i]) + " outside [0," + std::to_string(*num_topics) + ")");
    }
    if (i > 0 && boundaries[i] == 0 && topics[i] != topics[i - 1]) {
      fail("topics", "topic changes inside a segment at sentence " + std::to_string(i));
    }
  }
}

Document Document::truncated(std::size_t cap) const {
  if (cap == 0) throw ContractError("truncate: cap must be positive");
  if (size() <= cap) return *this;
  Document d;
  d.id = id;
  d.sentences.assign(sentences.begin(), sentences.begin() + static_cast<std::ptrdiff_t>(cap));
  d.boundaries.assign(boundaries.begin(), boundaries.begin() + static_cast<std::ptrdiff_t>(cap));
  d.topics.assign(topics.begin(), topics.begin() + static_cast<std::ptrdiff_t>(cap));
  return d;
}

TopicVocabulary::TopicVocabulary(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (index_.count(l) != 0) throw DataError("topic vocabulary: duplicate label '" + l + "'");
    add(l);
  }
}

int TopicVocabulary::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  if (oov_id()) throw ContractError("topic vocabulary: cannot add '" + label + "' after the OOV slot");
  const int id = size();
  labels_.push_back(label);
  index_.emplace(label, id);
  return id;
}

std::optional<int> TopicVocabulary::lookup(const std::string& label) const {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  return oov_id();
}

void TopicVocabulary::reserve_oov() {
  if (oov_id()) return;
  labels_.emplace_back(kOovLabel);
  index_.emplace(kOovLabel, size() - 1);
}

std::optional<int> TopicVocabulary::oov_id() const {
  if (!labels_.empty() && labels_.back() == kOovLabel) return size() - 1;
  return std::nullopt;
}

namespace dataio {

using OrderedJson = nlohmann::ordered_json;

std::string serialize_corpus(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    OrderedJson j;
    j["id"] = d.id;
    j["sentences"] = d.sentences;
    j["boundaries"] = d.boundaries;
    j["topics"] = d.topics;
    try {
      out += j.dump();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("document '" + d.id + "': cannot serialize: " + e.what());
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<Document> parse_corpus(std::string_view text) {
  std::vector<Document> docs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    OrderedJson j;
    try {
      j = OrderedJson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    Document d;
    try {
      d.id = j.at("id").get<std::string>();
      d.sentences = j.at("sentences").get<std::vector<std::string>>();
      d.boundaries = j.at("boundaries").get<std::vector<int>>();
      d.topics = j.at("topics").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      const std::string id = j.contains("id") && j["id"].is_string() ? " (document '" + j["id"].get<std::string>() + "')" : "";
      throw DataError(where + id + ": " + e.what());
    }
    d.validate();
    docs.push_back(std::move(d));
  }
  return docs;
}

void save_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_corpus(docs));
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  try {
    return parse_corpus(io::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_vocabulary(const TopicVocabulary& vocab, const std::filesystem::path& path) {
  OrderedJson j;
  j["labels"] = vocab.labels();
  io::write_file_atomic(path, j.dump(2) + "\n");
}

TopicVocabulary load_vocabulary(const std::filesystem::path& path) {
  try {
    auto j = nlohmann::json::parse(io::read_file(path));
    return TopicVocabulary(j.at("labels").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

CorpusSplit split_corpus(std::vector<Document> docs, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split_corpus: ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ConfigError("split_corpus: ratios must sum to 1");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(docs.begin(), docs.end(), rng);
  const double n = static_cast<double>(docs.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * ratios[0]));
  const auto n_val = static_cast<std::size_t>(std::llround(n * ratios[1]));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= docs.size()) {
    throw ConfigError("split_corpus: " + std::to_string(docs.size()) +
                      " documents leave at least one split empty");
  }
  CorpusSplit s;
  auto it = std::make_move_iterator(docs.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(it + static_cast<std::ptrdiff_t>(n_train),
                      it + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(docs.end()));
  return s;
}

void SyntheticOptions::validate() const {
  if (n_docs <= 0 || sentences_per_doc <= 0 || embed_dim <= 0 || !(mean_segment_len >= 1.0)) {
    throw ConfigError("synthetic: counts must be positive and mean segment length at least 1");
  }
  if (num_topics < 2) throw ConfigError("synthetic: need at least 2 topics");
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw ConfigError("synthetic: separation must be finite and non-negative");
  }
}

namespace {

// Random directions, orthonormalized while the dimension allows it.
std::vector<Eigen::VectorXf> random_directions(int count, int dim, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<Eigen::VectorXf> dirs;
  for (int c = 0; c < count; ++c) {
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    if (c < dim) {
      for (const auto& u : dirs) v -= v.dot(u) * u;
    }
    v.normalize();
    dirs.push_back(std::move(v));
  }
  return dirs;
}

std::string make_sentence(int topic, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(6, 12);
  std::uniform_int_distribution<int> topic_word(0, 49);
  std::uniform_int_distribution<int> common_word(0, 199);
  std::bernoulli_distribution topical(0.6);
  const int words = length(rng);
  std::string s;
  for (int w = 0; w < words; ++w) {
    if (w > 0) s.push_back(' ');
    if (topical(rng)) {
      s += "t" + std::to_string(topic) + "w" + std::to_string(topic_word(rng));
    } else {
      s += "c" + std::to_string(common_word(rng));
    }
  }
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  s.push_back('.');
  return s;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticOptions& options) {
  options.validate();
  std::mt19937_64 rng(options.seed);
  const int dim = options.embed_dim;
  // Orthonormal topic directions scaled so every pair of means is
  // 2 * separation apart; the boundary offset has the same magnitude.
  const auto dirs = random_directions(options.num_topics + 1, dim, rng);
  const float radius = static_cast<float>(options.separation * std::sqrt(2.0));
  std::vector<Eigen::VectorXf> means;
  for (int k = 0; k < options.num_topics; ++k) means.push_back(dirs[static_cast<std::size_t>(k)] * radius);
  const Eigen::VectorXf break_offset = dirs.back() * radius;

  std::geometric_distribution<int> extra_len(1.0 / options.mean_segment_len);
  std::uniform_int_distribution<int> pick_topic(0, options.num_topics - 1);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  auto noise_vec = [&] {
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) v(i) = noise(rng);
    return v;
  };

  SyntheticCorpus out;
  for (int k = 0; k < options.num_topics; ++k) out.vocab.add("topic_" + std::to_string(k));
  out.single = EmbeddingStore(EmbeddingKind::kSingle, dim);
  out.pairwise = EmbeddingStore(EmbeddingKind::kPairwise, dim);

  const auto n = static_cast<std::size_t>(options.sentences_per_doc);
  for (int d = 0; d < options.n_docs; ++d) {
    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04d", d);
    doc.id = id;
    while (doc.size() < n) {
      const int topic = pick_topic(rng);
      const std::size_t len = std::min<std::size_t>(1 + static_cast<std::size_t>(extra_len(rng)), n - doc.size());
      for (std::size_t i = 0; i < len; ++i) {
        doc.sentences.push_back(make_sentence(topic, rng));
        doc.boundaries.push_back(i == 0 ? 1 : 0);
        doc.topics.push_back(topic);
      }
    }
    Matrix<float> single(static_cast<Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
      single.row(static_cast<Index>(i)) = (means[static_cast<std::size_t>(doc.topics[i])] + noise_vec()).transpose();
    }
    Matrix<float> pairwise(static_cast<Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Index>(i);
      Eigen::VectorXf v = noise_vec();
      if (i + 1 < n) {
        v += 0.5f * (single.row(r) + single.row(r + 1)).transpose();
        if (doc.boundaries[i + 1] == 1) v += break_offset;
      } else {
        v += 0.5f * single.row(r).transpose();
      }
      pairwise.row(r) = v.transpose();
    }
    doc.validate(options.num_topics);
    out.single.add(doc.id, std::move(single));
    out.pairwise.add(doc.id, std::move(pairwise));
    out.docs.push_back(std::move(doc));
  }
  return out;
}

}  // namespace dataio
}  // namespace t2seg
