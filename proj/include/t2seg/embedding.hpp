// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "t2seg/document.hpp"
#include "t2seg/errors.hpp"
#include "t2seg/tensor.hpp"

namespace t2seg {

enum class EmbeddingKind : std::uint8_t { kSingle = 0, kPairwise = 1 };

const char* to_string(EmbeddingKind kind);

/// Per-document blocks of frozen sentence vectors, kept in insertion order.
class EmbeddingStore {
 public:
  EmbeddingStore(EmbeddingKind kind, int dim);

  EmbeddingKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  /// Appends a document block; rejects duplicate ids, wrong widths and
  /// non-finite values.
  void add(std::string doc_id, Matrix<float> rows);
  bool contains(const std::string& doc_id) const { return index_.count(doc_id) != 0; }
  /// Throws DataError when the document is missing.
  const Matrix<float>& rows(const std::string& doc_id) const;

  struct Entry {
    std::string id;
    Matrix<float> rows;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  EmbeddingKind kind_;
  int dim_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Load failures of the T2EMB format, one reason per distinct error.
class EmbeddingFormatError : public DataError {
 public:
  enum class Reason { kBadMagic, kTruncated, kDimMismatch, kKindMismatch, kDuplicateId, kBadValue };
  EmbeddingFormatError(Reason reason, const std::string& what) : DataError(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

inline constexpr char kEmbeddingMagic[] = "T2EMB001";

/// Serialized T2EMB bytes (little-endian).
std::string serialize_embedding_store(const EmbeddingStore& store);
EmbeddingStore parse_embedding_store(std::string_view bytes,
                                     std::optional<EmbeddingKind> expected_kind = std::nullopt,
                                     std::optional<int> expected_dim = std::nullopt);

void save_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_embedding_store(const std::filesystem::path& path,
                                    std::optional<EmbeddingKind> expected_kind = std::nullopt,
                                    std::optional<int> expected_dim = std::nullopt);

/// Lowercased word tokens; ASCII letters and digits plus any non-ASCII byte
/// form words, everything else separates.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing of word uni- and bi-grams, L2-normalized. Empty
/// input yields the zero vector.
Eigen::VectorXf hash_encode(std::string_view sentence, int dim, std::uint64_t seed);

/// hash_encode of the pair joined by a separator token that tokenization can
/// never produce.
Eigen::VectorXf pairwise_hash_encode(std::string_view sentence, std::string_view next, int dim,
                                     std::uint64_t seed);

struct HashEncoderConfig {
  int dim = 128;
  std::uint64_t seed = 0;
};

/// A frozen source of one embedding kind: either a loaded store or the
/// deterministic hash encoder.
class EmbeddingProvider {
 public:
  static EmbeddingProvider from_store(std::shared_ptr<const EmbeddingStore> store);
  static EmbeddingProvider hashed(EmbeddingKind kind, HashEncoderConfig config);

  EmbeddingKind kind() const { return kind_; }
  int dim() const;
  /// One row per sentence of `doc`.
  Matrix<float> encode(const Document& doc) const;

 private:
  EmbeddingKind kind_ = EmbeddingKind::kSingle;
  std::shared_ptr<const EmbeddingStore> store_;
  HashEncoderConfig hash_;
};

/// Column layout of the composed matrix: [single | pairwise].
struct EmbeddingLayout {
  int single_dim = 0;
  int pairwise_dim = 0;
  int width() const { return single_dim + pairwise_dim; }
};

struct EmbeddingMatrix {
  std::string doc_id;
  Matrix<float> values;
  Index rows() const { return values.rows(); }
};

/// Concatenates the enabled providers per sentence and truncates to `cap`
/// rows. At least one provider must be given.
EmbeddingMatrix compose_document_matrix(const Document& doc, const EmbeddingProvider* single,
                                        const EmbeddingProvider* pairwise, std::size_t cap);

EmbeddingLayout layout_of(const EmbeddingProvider* single, const EmbeddingProvider* pairwise);

}  // namespace t2seg
