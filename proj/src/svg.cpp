// Copyright 2026 The voxtrait Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "voxtrait/svg.hpp"

#include <spdlog/fmt/fmt.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "voxtrait/error.hpp"

namespace voxtrait::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(int w, int h) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      w, h);
}

}  // namespace

std::string dendrogram(const cluster::Dendrogram& d, std::optional<std::size_t> cut_k) {
  const std::size_t n = d.leaf_count();
  const int w = 60 + static_cast<int>(n) * 28, h = 380;
  const double left = 50, right = w - 10.0, top = 20, bottom = 260;
  const double top_height = d.merges.empty() ? 1.0 : d.merges.back().distance * 1.05 + 1e-12;
  auto ypos = [&](double height) { return bottom - (bottom - top) * height / top_height; };

  const auto order = cluster::leaf_order(d);
  std::vector<double> x(2 * n - 1, 0.0), y(2 * n - 1, bottom);
  for (std::size_t i = 0; i < order.size(); ++i) {
    x[order[i]] = left + (right - left) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }

  std::string s = header(w, h);
  s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left - 5, top, left - 5, bottom);
  for (int t = 0; t <= 4; ++t) {
    const double v = top_height * t / 4.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 8, ypos(v) + 4, v);
  }
  for (const auto& m : d.merges) {
    x[m.id] = 0.5 * (x[m.a] + x[m.b]);
    y[m.id] = ypos(m.distance);
    s += fmt::format(
        "<path d=\"M{:.1f},{:.1f} V{:.1f} H{:.1f} V{:.1f}\" fill=\"none\" stroke=\"#1f3b73\" stroke-width=\"1.5\"/>\n",
        x[m.a], y[m.a], y[m.id], x[m.b], y[m.b]);
  }
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    s += fmt::format("<text transform=\"translate({:.1f},{:.1f}) rotate(60)\">{}</text>\n", x[leaf] - 3, bottom + 8,
                     escape(d.leaves[leaf]));
  }
  if (cut_k) {
    const double yc = ypos(cluster::cut_height(d, *cut_k));
    s += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n"
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">k = {}</text>\n",
        left, yc, right, yc, right, yc - 4, *cut_k);
  }
  s += "</svg>\n";
  return s;
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                       const std::vector<Series>& series, std::optional<double> reference) {
  const int w = 640, h = 400;
  const double left = 60, right = 480, top = 40, bottom = 340;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!x.empty()) {
    xmin = *std::min_element(x.begin(), x.end());
    xmax = *std::max_element(x.begin(), x.end());
  }
  bool first = true;
  auto take = [&](double v) {
    if (!std::isfinite(v)) return;
    if (first) {
      ymin = ymax = v;
      first = false;
    }
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  };
  for (const auto& se : series)
    for (double v : se.y) take(v);
  if (reference) take(*reference);
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double v) { return left + (right - left) * (v - xmin) / (xmax - xmin); };
  auto py = [&](double v) { return bottom - (bottom - top) * (v - ymin) / (ymax - ymin); };

  std::string s = header(w, h);
  s += fmt::format("<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n", left, escape(title));
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
                   right - left, bottom - top);
  for (int t = 0; t <= 4; ++t) {
    const double v = ymin + (ymax - ymin) * t / 4.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 4, py(v) + 4, v);
  }
  for (double v : x) {
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", px(v), bottom + 14, v);
  }
  s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", 0.5 * (left + right), bottom + 32,
                   escape(x_label));
  if (reference) {
    s += fmt::format(
        "<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n", left,
        py(*reference), right, py(*reference));
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto* colour = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (std::size_t j = 0; j < std::min(x.size(), series[i].y.size()); ++j) {
      if (!std::isfinite(series[i].y[j])) continue;
      pts += fmt::format("{:.1f},{:.1f} ", px(x[j]), py(series[i].y[j]));
    }
    s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", pts, colour);
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", right + 12,
                     top + 18.0 * static_cast<double>(i), colour);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", right + 30, top + 10 + 18.0 * static_cast<double>(i),
                     escape(series[i].name));
  }
  s += "</svg>\n";
  return s;
}

std::string pie(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& weights) {
  if (labels.size() != weights.size()) throw InvalidArgument("pie: label and weight counts differ");
  const int w = 640, h = 60 + std::max<int>(320, 18 * static_cast<int>(labels.size()) + 20);
  const double cx = 180, cy = 200, r = 140;
  double total = 0.0;
  for (double v : weights) total += std::max(0.0, v);

  std::string s = header(w, h);
  s += fmt::format("<text x=\"20\" y=\"24\" font-size=\"14\">{}</text>\n", escape(title));
  double angle = -std::numbers::pi / 2;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto* colour = kPalette[i % std::size(kPalette)];
    const double frac = total > 0 ? std::max(0.0, weights[i]) / total : 0.0;
    if (frac >= 1.0 - 1e-12) {
      s += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n", cx, cy, r, colour);
    } else if (frac > 0) {
      const double a1 = angle + 2 * std::numbers::pi * frac;
      s += fmt::format(
          "<path d=\"M{},{} L{:.2f},{:.2f} A{},{} 0 {} 1 {:.2f},{:.2f} Z\" fill=\"{}\" stroke=\"white\"/>\n", cx, cy,
          cx + r * std::cos(angle), cy + r * std::sin(angle), r, r, frac > 0.5 ? 1 : 0, cx + r * std::cos(a1),
          cy + r * std::sin(a1), colour);
      angle = a1;
    }
    s += fmt::format("<rect x=\"350\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", 50 + 18 * i, colour);
    s += fmt::format("<text x=\"368\" y=\"{}\">{:.2f}% {}</text>\n", 60 + 18 * i, 100.0 * frac, escape(labels[i]));
  }
  s += "</svg>\n";
  return s;
}

void write(const std::string& path, const std::string& svg) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << svg;
}

}  // namespace voxtrait::svg
