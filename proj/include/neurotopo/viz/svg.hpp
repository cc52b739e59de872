#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "neurotopo/eval/metrics.hpp"
#include "neurotopo/topo/topomap.hpp"

// Hand-rolled SVG output: every shape is emitted with fixed-precision
// coordinates, so a rerun produces byte-identical files.

namespace neurotopo::viz {

namespace detail {

inline std::string num(double v, int decimals = 2) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// blue -> white -> red diverging ramp over t in [0, 1]
inline std::string diverging_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double lo[3] = {59, 76, 192}, mid[3] = {245, 245, 245},
               hi[3] = {180, 4, 38};
  double rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = t < 0.5 ? lo[c] + (mid[c] - lo[c]) * (t * 2.0)
                     : mid[c] + (hi[c] - mid[c]) * (t * 2.0 - 1.0);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(rgb[0] + 0.5),
                static_cast<int>(rgb[1] + 0.5), static_cast<int>(rgb[2] + 0.5));
  return buf;
}

inline void append_text(std::string& svg, double x, double y, const std::string& s,
                        const std::string& anchor = "middle", int size = 12) {
  svg += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
}

}  // namespace detail

// One panel per band, values normalized per plane over the head mask.
inline std::string render_topomap_svg(const topo::TopographicImage& img,
                                      const std::vector<std::string>& band_names,
                                      const std::string& title) {
  const double panel = 120.0, gap = 12.0, top = 34.0, label_h = 18.0;
  const double width = gap + (panel + gap) * img.bands;
  const double height = top + panel + label_h + gap;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
                    detail::num(width) + " " + detail::num(height) + "\">\n";
  svg += "<rect width=\"" + detail::num(width) + "\" height=\"" + detail::num(height) +
         "\" fill=\"#ffffff\"/>\n";
  detail::append_text(svg, width / 2, 20, title, "middle", 13);

  const std::size_t npx = img.plane_size();
  for (int b = 0; b < img.bands; ++b) {
    const double* plane = img.plane(b);
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (std::size_t i = 0; i < npx; ++i) {
      if (!img.mask[i]) continue;
      if (!seen || plane[i] < lo) lo = plane[i];
      if (!seen || plane[i] > hi) hi = plane[i];
      seen = true;
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const double x0 = gap + (panel + gap) * b;
    const double cell = panel / img.width, cellv = panel / img.height;
    for (int row = 0; row < img.height; ++row)
      for (int col = 0; col < img.width; ++col) {
        const std::size_t i = static_cast<std::size_t>(row) * img.width + col;
        if (!img.mask[i]) continue;
        svg += "<rect x=\"" + detail::num(x0 + col * cell) + "\" y=\"" +
               detail::num(top + row * cellv) + "\" width=\"" + detail::num(cell) +
               "\" height=\"" + detail::num(cellv) + "\" fill=\"" +
               detail::diverging_color((plane[i] - lo) / span) + "\"/>\n";
      }
    const std::string name = b < static_cast<int>(band_names.size())
                                 ? band_names[static_cast<std::size_t>(b)]
                                 : "band " + std::to_string(b);
    detail::append_text(svg, x0 + panel / 2, top + panel + 14, name, "middle", 11);
  }
  svg += "</svg>\n";
  return svg;
}

// Accuracy per fold as bars, with a dotted mean line, a shaded 95% confidence
// band (mean +- 1.96*std/sqrt(n)), and a dashed chance line at 1/class_count.
inline std::string render_metrics_svg(const eval::MetricsReport& report) {
  const double width = 640, height = 400;
  const double left = 56, right = 620, topy = 46, bottom = 356;
  const double plot_w = right - left, plot_h = bottom - topy;
  const auto y_of = [&](double v) { return bottom - plot_h * std::clamp(v, 0.0, 1.0); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
                    detail::num(width) + " " + detail::num(height) + "\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"#ffffff\"/>\n";
  detail::append_text(svg, (left + right) / 2, 22,
                      report.experiment + ": per-fold accuracy", "middle", 14);

  // y grid and labels
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0, y = y_of(v);
    svg += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(y) + "\" x2=\"" +
           detail::num(right) + "\" y2=\"" + detail::num(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    detail::append_text(svg, left - 8, y + 4, detail::num(v, 1), "end", 11);
  }

  const std::size_t n = report.per_fold.size();
  if (n > 0) {
    // confidence band behind the bars
    const double mean = report.accuracy.mean;
    const double ci = 1.96 * report.accuracy.stddev / std::sqrt(static_cast<double>(n));
    const double y_hi = y_of(std::min(1.0, mean + ci));
    const double y_lo = y_of(std::max(0.0, mean - ci));
    svg += "<rect x=\"" + detail::num(left) + "\" y=\"" + detail::num(y_hi) +
           "\" width=\"" + detail::num(plot_w) + "\" height=\"" +
           detail::num(std::max(0.0, y_lo - y_hi)) +
           "\" fill=\"#999999\" fill-opacity=\"0.25\"/>\n";

    const double slot = plot_w / static_cast<double>(n);
    const double bar_w = slot * 0.8;
    const std::size_t label_step = n <= 20 ? 1 : (n + 19) / 20;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& fr = report.per_fold[i];
      const double acc = fr.metrics.accuracy;
      const double x = left + slot * static_cast<double>(i) + slot * 0.1;
      svg += "<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(y_of(acc)) +
             "\" width=\"" + detail::num(bar_w) + "\" height=\"" +
             detail::num(bottom - y_of(acc)) + "\" fill=\"#4878a8\"/>\n";
      if (i % label_step == 0) {
        const std::string label = fr.group >= 0 ? std::to_string(fr.group)
                                                : std::to_string(fr.repetition) + "." +
                                                      std::to_string(fr.fold);
        detail::append_text(svg, x + bar_w / 2, bottom + 14, label, "middle", 10);
      }
    }

    svg += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(y_of(mean)) +
           "\" x2=\"" + detail::num(right) + "\" y2=\"" + detail::num(y_of(mean)) +
           "\" stroke=\"#303030\" stroke-width=\"1.5\" stroke-dasharray=\"2 3\"/>\n";
  }

  const double chance = report.class_count > 0 ? 1.0 / report.class_count : 0.0;
  svg += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(y_of(chance)) +
         "\" x2=\"" + detail::num(right) + "\" y2=\"" + detail::num(y_of(chance)) +
         "\" stroke=\"#c04040\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n";

  // axes
  svg += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(topy - 6) +
         "\" x2=\"" + detail::num(left) + "\" y2=\"" + detail::num(bottom) +
         "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(bottom) +
         "\" x2=\"" + detail::num(right) + "\" y2=\"" + detail::num(bottom) +
         "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  detail::append_text(svg, (left + right) / 2, 382,
                      report.per_fold.size() > 0 && report.per_fold[0].group >= 0
                          ? "held-out group"
                          : "repetition.fold",
                      "middle", 11);

  // legend
  svg += "<line x1=\"470\" y1=\"34\" x2=\"494\" y2=\"34\" stroke=\"#303030\" "
         "stroke-width=\"1.5\" stroke-dasharray=\"2 3\"/>\n";
  detail::append_text(svg, 498, 38, "mean", "start", 10);
  svg += "<rect x=\"536\" y=\"28\" width=\"24\" height=\"10\" fill=\"#999999\" "
         "fill-opacity=\"0.25\"/>\n";
  detail::append_text(svg, 564, 38, "95% CI", "start", 10);
  svg += "<line x1=\"406\" y1=\"34\" x2=\"430\" y2=\"34\" stroke=\"#c04040\" "
         "stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n";
  detail::append_text(svg, 434, 38, "chance", "start", 10);

  svg += "</svg>\n";
  return svg;
}

}  // namespace neurotopo::viz
