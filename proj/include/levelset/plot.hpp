#pragma once

// Minimal log-log line/scatter plots written as standalone SVG.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "levelset/errors.hpp"

namespace levelset::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = true;
  bool line = true;
  double opacity = 1.0;
};

class LogLogPlot {
 public:
  LogLogPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void add(Series s) { series_.push_back(std::move(s)); }

  void write(const std::filesystem::path& path) const {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series_) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
        x0 = std::min(x0, std::log10(s.x[i]));
        x1 = std::max(x1, std::log10(s.x[i]));
        y0 = std::min(y0, std::log10(s.y[i]));
        y1 = std::max(y1, std::log10(s.y[i]));
      }
    }
    if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
    y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);

    const double w = 640, h = 480, l = 80, r = 160, t = 40, b = 60;
    auto px = [&](double v) { return l + (std::log10(v) - x0) / (x1 - x0) * (w - l - r); };
    auto py = [&](double v) { return h - b - (std::log10(v) - y0) / (y1 - y0) * (h - t - b); };

    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" font-family=\"sans-serif\" "
           "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  l, t, w - l - r, h - t - b);
    out << buf;
    for (double d = x0; d <= x1 + 1e-9; d += 1.0) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">1e%g</text>\n",
                    px(std::pow(10.0, d)), h - b + 18, d);
      out << buf;
    }
    for (double d = y0; d <= y1 + 1e-9; d += 1.0) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">1e%g</text>\n", l - 6,
                    py(std::pow(10.0, d)) + 4, d);
      out << buf;
    }
    out << "<text x=\"" << (l + (w - l - r) / 2) << "\" y=\"" << (h - 15) << "\" text-anchor=\"middle\">"
        << escape(xlabel_) << "</text>\n";
    out << "<text x=\"20\" y=\"" << (t + (h - t - b) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << (t + (h - t - b) / 2) << ")\">" << escape(ylabel_) << "</text>\n";
    out << "<text x=\"" << (w - r) / 2 + l / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(title_) << "</text>\n";

    int legend = 0;
    for (const auto& s : series_) {
      std::string pts;
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
        pts += buf;
        if (s.markers) {
          std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\" fill-opacity=\"%g\"/>\n",
                        px(s.x[i]), py(s.y[i]), s.color.c_str(), s.opacity);
          out << buf;
        }
      }
      if (s.line && !pts.empty()) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-opacity=\"" << s.opacity
            << "\" points=\"" << pts << "\"/>\n";
      }
      if (!s.label.empty()) {
        const double ly = t + 12 + 16 * legend++;
        std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", w - r + 10,
                      ly - 9, s.color.c_str());
        out << buf << "<text x=\"" << (w - r + 26) << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
      }
    }
    out << "</svg>\n";
  }

 private:
  static std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }

  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
};

}  // namespace levelset::plot
