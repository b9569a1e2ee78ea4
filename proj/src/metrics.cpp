// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/metrics.hpp"

#include <cmath>
#include <numeric>

#include "t2seg/errors.hpp"

namespace t2seg::metrics {

int Segmentation::segment_count() const {
  return std::accumulate(boundaries.begin(), boundaries.end(), 0);
}

std::vector<int> Segmentation::segment_ids() const {
  std::vector<int> ids(boundaries.size());
  int current = -1;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (boundaries[i] != 0 || i == 0) ++current;
    ids[i] = current;
  }
  return ids;
}

void Segmentation::validate() const {
  if (boundaries.empty()) throw ContractError("segmentation: empty");
  if (boundaries[0] != 1) throw ContractError("segmentation: first sentence must start a segment");
  for (int b : boundaries) {
    if (b != 0 && b != 1) throw ContractError("segmentation: boundary values must be 0 or 1");
  }
}

int compute_k(const Segmentation& reference) {
  reference.validate();
  const auto n = static_cast<long>(reference.size());
  if (n < 2) throw ContractError("compute_k: Pk undefined for fewer than 2 sentences");
  const long denom = 2L * reference.segment_count();
  // round half up of n / denom in integer arithmetic
  const long k = (2 * n + denom) / (2 * denom);
  return static_cast<int>(std::max(1L, k));
}

double pk_document(const Segmentation& reference, const Segmentation& hypothesis, int k) {
  reference.validate();
  hypothesis.validate();
  if (reference.size() != hypothesis.size()) {
    throw ContractError("pk_document: reference has " + std::to_string(reference.size()) +
                        " sentences, hypothesis " + std::to_string(hypothesis.size()));
  }
  const auto n = static_cast<int>(reference.size());
  if (k < 1 || k >= n) {
    throw ContractError("pk_document: k=" + std::to_string(k) + " outside [1," +
                        std::to_string(n) + ")");
  }
  // cum[i] = number of boundaries in positions 1..i; i and j share a segment
  // iff cum[i] == cum[j].
  std::vector<int> ref_cum(n), hyp_cum(n);
  ref_cum[0] = hyp_cum[0] = 0;
  for (int i = 1; i < n; ++i) {
    ref_cum[i] = ref_cum[i - 1] + reference.boundaries[i];
    hyp_cum[i] = hyp_cum[i - 1] + hypothesis.boundaries[i];
  }
  int disagreements = 0;
  for (int i = 0; i + k < n; ++i) {
    const bool ref_same = ref_cum[i] == ref_cum[i + k];
    const bool hyp_same = hyp_cum[i] == hyp_cum[i + k];
    disagreements += ref_same != hyp_same ? 1 : 0;
  }
  return static_cast<double>(disagreements) / static_cast<double>(n - k);
}

double pk_document(const Segmentation& reference, const Segmentation& hypothesis) {
  return pk_document(reference, hypothesis, compute_k(reference));
}

double pk_corpus(std::span<const DocumentPair> docs) {
  if (docs.empty()) throw ContractError("pk_corpus: empty corpus");
  double total = 0.0;
  for (const auto& d : docs) total += pk_document(d.reference, d.hypothesis);
  return total / static_cast<double>(docs.size());
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "uniform") return BaselineKind::kUniform;
  if (name == "random") return BaselineKind::kRandom;
  if (name == "none") return BaselineKind::kNone;
  throw ConfigError("unknown baseline kind '" + name + "'");
}

Segmentation baseline_segment(BaselineKind kind, const Segmentation& reference,
                              std::mt19937_64& rng) {
  reference.validate();
  const std::size_t n = reference.size();
  Segmentation out;
  out.boundaries.assign(n, 0);
  out.boundaries[0] = 1;
  switch (kind) {
    case BaselineKind::kNone:
      break;
    case BaselineKind::kUniform: {
      const int segments = reference.segment_count();
      const auto step = static_cast<std::size_t>((n + segments - 1) / segments);
      for (std::size_t i = step; i < n; i += step) out.boundaries[i] = 1;
      break;
    }
    case BaselineKind::kRandom: {
      if (n < 2) break;
      // The leading boundary is structural and excluded from the rate.
      const double rate =
          static_cast<double>(reference.segment_count() - 1) / static_cast<double>(n - 1);
      std::bernoulli_distribution draw(rate);
      for (std::size_t i = 1; i < n; ++i) out.boundaries[i] = draw(rng) ? 1 : 0;
      break;
    }
  }
  return out;
}

}  // namespace t2seg::metrics
