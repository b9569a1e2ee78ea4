// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

namespace t2seg {

/// SVG line plot of per-sentence boundary probabilities with the gold
/// boundaries drawn as vertical red markers along the top. Output depends
/// only on the arguments.
std::string boundary_plot_svg(std::span<const double> seg_prob, std::span<const int> gold_boundaries,
                              const std::string& title);

}  // namespace t2seg
