// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "t2seg/plot.hpp"

#include <cstdio>

#include "t2seg/errors.hpp"

namespace t2seg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string boundary_plot_svg(std::span<const double> seg_prob, std::span<const int> gold_boundaries,
                              const std::string& title) {
  if (seg_prob.size() != gold_boundaries.size()) {
    throw DimensionError("boundary_plot_svg: probability and gold lengths differ");
  }
  constexpr double kWidth = 800, kHeight = 300, kLeft = 50, kRight = 20, kTop = 40, kBottom = 40;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const std::size_t n = seg_prob.size();
  auto x_at = [&](std::size_t i) { return kLeft + (n <= 1 ? 0.0 : plot_w * static_cast<double>(i) / static_cast<double>(n - 1)); };
  auto y_at = [&](double p) { return kTop + plot_h * (1.0 - p); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"300\" viewBox=\"0 0 800 300\">\n";
  svg += "<rect width=\"800\" height=\"300\" fill=\"white\"/>\n";
  svg += "<text x=\"400\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape_xml(title) + "</text>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" + fmt(kLeft + plot_w) +
         "\" y2=\"" + fmt(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    svg += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(y_at(tick) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(tick) + "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (gold_boundaries[i] != 1) continue;
    svg += "<line class=\"gold\" x1=\"" + fmt(x_at(i)) + "\" y1=\"" + fmt(kTop - 10) + "\" x2=\"" + fmt(x_at(i)) +
           "\" y2=\"" + fmt(kTop + plot_h) + "\" stroke=\"red\" stroke-width=\"1\" stroke-dasharray=\"3,3\"/>\n";
  }
  svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) svg += ' ';
    svg += fmt(x_at(i)) + "," + fmt(y_at(seg_prob[i]));
  }
  svg += "\"/>\n";
  svg += "<text x=\"400\" y=\"292\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">sentence</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace t2seg
