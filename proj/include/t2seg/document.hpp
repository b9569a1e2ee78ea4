// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "t2seg/metrics.hpp"

namespace t2seg {

/// A segmented document: one boundary flag and one topic id per sentence.
struct Document {
  std::string id;
  std::vector<std::string> sentences;
  std::vector<int> boundaries;
  std::vector<int> topics;

  std::size_t size() const { return sentences.size(); }
  metrics::Segmentation segmentation() const { return {boundaries}; }

  /// Throws DataError naming the id and offending field. When `num_topics` is
  /// given, topic ids must lie in [0, num_topics).
  void validate(std::optional<int> num_topics = std::nullopt) const;

  /// First `cap` sentences with labels cut to the same length.
  Document truncated(std::size_t cap) const;
};

/// Topic label names indexed by id. An optional reserved out-of-vocabulary
/// label occupies the top id.
class TopicVocabulary {
 public:
  static constexpr const char* kOovLabel = "<unk>";

  TopicVocabulary() = default;
  explicit TopicVocabulary(std::vector<std::string> labels);

  /// Returns the id of `label`, adding it when absent.
  int add(const std::string& label);
  /// Id of `label`, or the OOV id when reserved and the label is unknown.
  std::optional<int> lookup(const std::string& label) const;
  /// Appends the reserved OOV label (idempotent).
  void reserve_oov();

  std::optional<int> oov_id() const;
  int size() const { return static_cast<int>(labels_.size()); }
  /// Labels excluding the reserved OOV entry.
  int distinct_labels() const { return size() - (oov_id() ? 1 : 0); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace t2seg
