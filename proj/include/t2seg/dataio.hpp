// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "t2seg/document.hpp"
#include "t2seg/embedding.hpp"

namespace t2seg::dataio {

/// One JSON object per line: {"id", "sentences", "boundaries", "topics"}.
std::string serialize_corpus(const std::vector<Document>& docs);
std::vector<Document> parse_corpus(std::string_view text);

void save_corpus(const std::vector<Document>& docs, const std::filesystem::path& path);
std::vector<Document> load_corpus(const std::filesystem::path& path);

/// {"labels": [...]}, index = id.
void save_vocabulary(const TopicVocabulary& vocab, const std::filesystem::path& path);
TopicVocabulary load_vocabulary(const std::filesystem::path& path);

struct CorpusSplit {
  std::vector<Document> train;
  std::vector<Document> validation;
  std::vector<Document> test;
};

/// Seeded shuffle, then contiguous slices sized by `ratios`.
CorpusSplit split_corpus(std::vector<Document> docs, std::array<double, 3> ratios, std::uint64_t seed);

struct SyntheticOptions {
  int n_docs = 200;
  int sentences_per_doc = 40;
  int num_topics = 4;
  double mean_segment_len = 8.0;
  int embed_dim = 32;
  double separation = 3.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<Document> docs;
  TopicVocabulary vocab;
  EmbeddingStore single{EmbeddingKind::kSingle, 1};
  EmbeddingStore pairwise{EmbeddingKind::kPairwise, 1};
};

/// Documents with topic-clustered Gaussian sentence embeddings. Single rows
/// are topic mean + unit noise; pairwise rows are the mean of a sentence and
/// its successor plus noise, offset along a fixed direction when the
/// successor opens a new segment.
SyntheticCorpus generate_synthetic(const SyntheticOptions& options);

/// Rule-based splitter: a sentence ends at . ! or ? followed by whitespace
/// and an uppercase letter or digit, unless the word before the terminator is
/// a known abbreviation or a single letter.
std::vector<std::string> split_sentences(std::string_view text);

struct ImportOptions {
  /// Sections with these labels are dropped before segmentation.
  std::vector<std::string> skip_labels;
  /// Documents with fewer segments are dropped.
  int min_segments = 2;
  /// Add unseen labels to the vocabulary (training split) instead of mapping
  /// them to the reserved OOV id.
  bool grow_vocabulary = true;
};

struct ImportResult {
  std::vector<Document> docs;
  std::vector<std::string> warnings;
  /// Documents rejected for malformed annotations.
  int skipped = 0;
  /// Documents filtered for having fewer than min_segments segments.
  int dropped = 0;
};

/// Parses the WikiSection JSON release (array of documents with "text" and
/// "annotations" carrying begin/length offsets in UTF-16 code units plus
/// "sectionLabel"). `vocab` is extended or consulted per options.
ImportResult import_wikisection(std::string_view json_text, TopicVocabulary& vocab,
                                const ImportOptions& options = {});

}  // namespace t2seg::dataio
