// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/embedding.hpp"

#include <cmath>
#include <limits>

#include "t2seg/io.hpp"

namespace t2seg {

const char* to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::kSingle ? "single" : "pairwise";
}

EmbeddingStore::EmbeddingStore(EmbeddingKind kind, int dim) : kind_(kind), dim_(dim) {
  if (dim <= 0) throw ConfigError("embedding store: dim must be positive");
}

void EmbeddingStore::add(std::string doc_id, Matrix<float> rows) {
  using Reason = EmbeddingFormatError::Reason;
  if (index_.count(doc_id) != 0) {
    throw EmbeddingFormatError(Reason::kDuplicateId, "embedding store: duplicate doc id '" + doc_id + "'");
  }
  if (rows.cols() != dim_) {
    throw EmbeddingFormatError(Reason::kDimMismatch, "embedding store: doc '" + doc_id + "' has width " +
                                                         std::to_string(rows.cols()) + ", store dim " +
                                                         std::to_string(dim_));
  }
  if (!rows.allFinite()) {
    throw EmbeddingFormatError(Reason::kBadValue, "embedding store: non-finite value in doc '" + doc_id + "'");
  }
  index_.emplace(doc_id, entries_.size());
  entries_.push_back({std::move(doc_id), std::move(rows)});
}

const Matrix<float>& EmbeddingStore::rows(const std::string& doc_id) const {
  auto it = index_.find(doc_id);
  if (it == index_.end()) {
    throw DataError(std::string(to_string(kind_)) + " embedding store has no document '" + doc_id + "'");
  }
  return entries_[it->second].rows;
}

std::string serialize_embedding_store(const EmbeddingStore& store) {
  io::ByteWriter w;
  w.bytes(std::string_view(kEmbeddingMagic, 8));
  w.u8(static_cast<std::uint8_t>(store.kind()));
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& e : store.entries()) {
    if (e.id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw DataError("embedding store: doc id too long: " + e.id.substr(0, 64));
    }
    w.u16(static_cast<std::uint16_t>(e.id.size()));
    w.bytes(e.id);
    w.u32(static_cast<std::uint32_t>(e.rows.rows()));
  }
  for (const auto& e : store.entries()) {
    for (Index i = 0; i < e.rows.size(); ++i) w.f32(e.rows.data()[i]);
  }
  return w.take();
}

EmbeddingStore parse_embedding_store(std::string_view bytes, std::optional<EmbeddingKind> expected_kind,
                                     std::optional<int> expected_dim) {
  using Reason = EmbeddingFormatError::Reason;
  io::ByteReader r(bytes);
  auto truncated = [] { return EmbeddingFormatError(Reason::kTruncated, "T2EMB: truncated file"); };
  std::string_view magic;
  if (!r.try_take(8, magic)) {
    if (bytes.size() >= 1 && std::string_view(kEmbeddingMagic).substr(0, bytes.size()) != bytes) {
      throw EmbeddingFormatError(Reason::kBadMagic, "T2EMB: bad magic");
    }
    throw truncated();
  }
  if (magic != std::string_view(kEmbeddingMagic, 8)) {
    throw EmbeddingFormatError(Reason::kBadMagic, "T2EMB: bad magic");
  }
  std::uint8_t kind_byte = 0;
  std::uint32_t dim = 0, doc_count = 0;
  if (!r.try_u8(kind_byte) || !r.try_u32(dim) || !r.try_u32(doc_count)) throw truncated();
  if (kind_byte > 1) {
    throw EmbeddingFormatError(Reason::kKindMismatch, "T2EMB: unknown kind byte " + std::to_string(kind_byte));
  }
  const auto kind = static_cast<EmbeddingKind>(kind_byte);
  if (expected_kind && *expected_kind != kind) {
    throw EmbeddingFormatError(Reason::kKindMismatch, std::string("T2EMB: expected ") +
                                                          to_string(*expected_kind) + " store, file holds " +
                                                          to_string(kind));
  }
  if (dim == 0) throw EmbeddingFormatError(Reason::kDimMismatch, "T2EMB: zero dim");
  if (expected_dim && static_cast<std::uint32_t>(*expected_dim) != dim) {
    throw EmbeddingFormatError(Reason::kDimMismatch, "T2EMB: expected dim " + std::to_string(*expected_dim) +
                                                         ", file has " + std::to_string(dim));
  }
  struct Header {
    std::string id;
    std::uint32_t rows;
  };
  std::vector<Header> headers;
  headers.reserve(std::min<std::uint32_t>(doc_count, 1u << 20));
  for (std::uint32_t d = 0; d < doc_count; ++d) {
    std::uint16_t len = 0;
    std::string_view id;
    std::uint32_t rows = 0;
    if (!r.try_u16(len) || !r.try_take(len, id) || !r.try_u32(rows)) throw truncated();
    headers.push_back({std::string(id), rows});
  }
  EmbeddingStore store(kind, static_cast<int>(dim));
  for (const auto& h : headers) {
    if (store.contains(h.id)) {
      throw EmbeddingFormatError(Reason::kDuplicateId, "T2EMB: duplicate doc id '" + h.id + "'");
    }
    if (r.remaining() / 4 / dim < h.rows) throw truncated();
    Matrix<float> m(h.rows, dim);
    for (Index i = 0; i < m.size(); ++i) r.try_f32(m.data()[i]);
    store.add(h.id, std::move(m));
  }
  if (!r.at_end()) {
    throw EmbeddingFormatError(Reason::kTruncated, "T2EMB: " + std::to_string(r.remaining()) +
                                                       " trailing bytes after last row");
  }
  return store;
}

void save_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_embedding_store(store));
}

EmbeddingStore load_embedding_store(const std::filesystem::path& path, std::optional<EmbeddingKind> expected_kind,
                                    std::optional<int> expected_dim) {
  try {
    return parse_embedding_store(io::read_file(path), expected_kind, expected_dim);
  } catch (const EmbeddingFormatError& e) {
    throw EmbeddingFormatError(e.reason(), path.string() + ": " + e.what());
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t keyed_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ull ^ splitmix64(seed);
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return splitmix64(h);
}

// Separators below 0x20 never occur inside tokens.
constexpr char kBigramJoin = '\x01';
constexpr std::string_view kPairSeparator = "\x02sep";

Eigen::VectorXf encode_tokens(const std::vector<std::string>& tokens, int dim, std::uint64_t seed) {
  if (dim < 8) throw ConfigError("hash_encode: dim must be at least 8");
  Eigen::VectorXf v = Eigen::VectorXf::Zero(dim);
  auto add = [&](std::string_view feature) {
    const std::uint64_t h = keyed_hash(feature, seed);
    v(static_cast<Index>(h % static_cast<std::uint64_t>(dim))) += (h >> 63) != 0 ? -1.0f : 1.0f;
  };
  std::string bigram;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) {
      bigram.assign(tokens[i]);
      bigram.push_back(kBigramJoin);
      bigram.append(tokens[i + 1]);
      add(bigram);
    }
  }
  const float norm = v.norm();
  if (norm > 0.0f) v /= norm;
  return v;
}

}  // namespace

Eigen::VectorXf hash_encode(std::string_view sentence, int dim, std::uint64_t seed) {
  return encode_tokens(tokenize(sentence), dim, seed);
}

Eigen::VectorXf pairwise_hash_encode(std::string_view sentence, std::string_view next, int dim,
                                     std::uint64_t seed) {
  std::vector<std::string> tokens = tokenize(sentence);
  tokens.emplace_back(kPairSeparator);
  for (auto& t : tokenize(next)) tokens.push_back(std::move(t));
  return encode_tokens(tokens, dim, seed);
}

EmbeddingProvider EmbeddingProvider::from_store(std::shared_ptr<const EmbeddingStore> store) {
  if (!store) throw ContractError("embedding provider: null store");
  EmbeddingProvider p;
  p.kind_ = store->kind();
  p.store_ = std::move(store);
  return p;
}

EmbeddingProvider EmbeddingProvider::hashed(EmbeddingKind kind, HashEncoderConfig config) {
  if (config.dim < 8) throw ConfigError("hash provider: dim must be at least 8");
  EmbeddingProvider p;
  p.kind_ = kind;
  p.hash_ = config;
  return p;
}

int EmbeddingProvider::dim() const { return store_ ? store_->dim() : hash_.dim; }

Matrix<float> EmbeddingProvider::encode(const Document& doc) const {
  if (store_) {
    const Matrix<float>& rows = store_->rows(doc.id);
    if (static_cast<std::size_t>(rows.rows()) != doc.size()) {
      throw DataError(std::string(to_string(kind_)) + " embeddings for '" + doc.id + "' have " +
                      std::to_string(rows.rows()) + " rows, document has " + std::to_string(doc.size()) +
                      " sentences");
    }
    return rows;
  }
  Matrix<float> out(static_cast<Index>(doc.size()), hash_.dim);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    // Forward pairing: sentence i with i+1; the last one pairs with "".
    out.row(static_cast<Index>(i)) =
        kind_ == EmbeddingKind::kSingle
            ? hash_encode(doc.sentences[i], hash_.dim, hash_.seed).transpose()
            : pairwise_hash_encode(doc.sentences[i], i + 1 < doc.size() ? doc.sentences[i + 1] : "",
                                   hash_.dim, hash_.seed)
                  .transpose();
  }
  return out;
}

EmbeddingLayout layout_of(const EmbeddingProvider* single, const EmbeddingProvider* pairwise) {
  return {single ? single->dim() : 0, pairwise ? pairwise->dim() : 0};
}

EmbeddingMatrix compose_document_matrix(const Document& doc, const EmbeddingProvider* single,
                                        const EmbeddingProvider* pairwise, std::size_t cap) {
  if (single == nullptr && pairwise == nullptr) {
    throw ContractError("compose_document_matrix: no embedding provider enabled");
  }
  if (single && single->kind() != EmbeddingKind::kSingle) {
    throw ContractError("compose_document_matrix: single slot holds a pairwise provider");
  }
  if (pairwise && pairwise->kind() != EmbeddingKind::kPairwise) {
    throw ContractError("compose_document_matrix: pairwise slot holds a single provider");
  }
  if (cap == 0) throw ContractError("compose_document_matrix: cap must be positive");
  const EmbeddingLayout layout = layout_of(single, pairwise);
  const auto n = static_cast<Index>(std::min(doc.size(), cap));
  EmbeddingMatrix out{doc.id, Matrix<float>(n, layout.width())};
  if (single) out.values.leftCols(layout.single_dim) = single->encode(doc).topRows(n);
  if (pairwise) out.values.rightCols(layout.pairwise_dim) = pairwise->encode(doc).topRows(n);
  return out;
}

}  // namespace t2seg
