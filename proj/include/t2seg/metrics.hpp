// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace t2seg::metrics {

/// Sentence-level segmentation: boundaries[i] == 1 iff sentence i starts a
/// segment. boundaries[0] is always 1.
struct Segmentation {
  std::vector<int> boundaries;

  std::size_t size() const { return boundaries.size(); }
  int segment_count() const;
  /// Segment index of every sentence (0-based).
  std::vector<int> segment_ids() const;
  void validate() const;
};

/// Window size: max(1, round_half_up(n / (2 * segments))) of the reference.
int compute_k(const Segmentation& reference);

/// Pk error of `hypothesis` against `reference` with window `k`.
double pk_document(const Segmentation& reference, const Segmentation& hypothesis, int k);

/// Pk with k derived from the reference.
double pk_document(const Segmentation& reference, const Segmentation& hypothesis);

struct DocumentPair {
  Segmentation reference;
  Segmentation hypothesis;
};

/// Unweighted mean of per-document Pk, each with its own k.
double pk_corpus(std::span<const DocumentPair> docs);

enum class BaselineKind { kUniform, kRandom, kNone };

BaselineKind parse_baseline_kind(const std::string& name);

/// Degenerate segmenter of `reference.size()` sentences. uniform places a
/// boundary every ceil(mean segment length); random marks each inner position
/// with the reference's inner boundary rate; none yields one segment.
Segmentation baseline_segment(BaselineKind kind, const Segmentation& reference, std::mt19937_64& rng);

}  // namespace t2seg::metrics
