#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/io/csv.hpp"

namespace dynlab::io {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Line chart of the given y columns against column x. Non-finite points
/// break the polyline.
inline std::string svg_line_plot(const CsvTable& table, const std::string& x, const std::vector<std::string>& ys,
                                 const std::string& title) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const auto xs = table.column(x);
  std::vector<std::vector<double>> series;
  for (const auto& y : ys) series.push_back(table.column(y));

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (const auto& s : series) {
      if (!std::isfinite(xs[k]) || !std::isfinite(s[k])) continue;
      xmin = std::min(xmin, xs[k]);
      xmax = std::max(xmax, xs[k]);
      ymin = std::min(ymin, s[k]);
      ymax = std::max(ymax, s[k]);
    }
  }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  using detail::svg_num;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         detail::svg_escape(title) + "</text>\n";
  out += "<line x1=\"" + svg_num(L) + "\" y1=\"" + svg_num(H - B) + "\" x2=\"" + svg_num(W - R) + "\" y2=\"" + svg_num(H - B) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + svg_num(L) + "\" y1=\"" + svg_num(T) + "\" x2=\"" + svg_num(L) + "\" y2=\"" + svg_num(H - B) +
         "\" stroke=\"black\"/>\n";
  auto text = [&](double tx, double ty, const std::string& anchor, const std::string& s,
                  const std::string& fill = "black") {
    out += "<text x=\"" + svg_num(tx) + "\" y=\"" + svg_num(ty) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::svg_escape(s) + "</text>\n";
  };
  text(L, H - B + 16, "start", detail::svg_label(xmin));
  text(W - R, H - B + 16, "end", detail::svg_label(xmax));
  text(L - 6, H - B, "end", detail::svg_label(ymin));
  text(L - 6, T + 4, "end", detail::svg_label(ymax));
  text((L + W - R) / 2, H - 12, "middle", x);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const std::string color = colors[s % 6];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!std::isfinite(xs[k]) || !std::isfinite(series[s][k])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += svg_num(px(xs[k])) + "," + svg_num(py(series[s][k]));
    }
    flush();
    text(W - R - 4, T + 14 * static_cast<double>(s + 1), "end", ys[s], color);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace dynlab::io
