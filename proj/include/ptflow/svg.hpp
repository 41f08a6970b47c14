#ifndef PTFLOW_SVG_HPP
#define PTFLOW_SVG_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ptflow/common.hpp"

namespace ptflow {

/// Minimal SVG line plot. Presentation only; the CSV files are the data of
/// record.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)),
        xlabel_(std::move(xlabel)),
        ylabel_(std::move(ylabel)) {}

  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& label) {
    if (x.size() != y.size()) throw Error("SvgPlot: x/y size mismatch");
    lines_.push_back({x, y, label});
  }

  void write(const std::string& path) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& l : lines_) {
      for (double v : l.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
      for (double v : l.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    }
    if (!(xmax > xmin)) { xmax = xmin + 1; }
    if (!(ymax > ymin)) { ymax = ymin + 1; }
    const double pad_y = 0.05 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const int w = 720, h = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    auto px = [&](double x) {
      return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    };
    auto py = [&](double y) {
      return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
    };

    std::ofstream out(path);
    if (!out) throw Error("SvgPlot: cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
        << "' height='" << h << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << w / 2 << "' y='24' text-anchor='middle' "
        << "font-size='16'>" << title_ << "</text>\n"
        << "<text x='" << w / 2 << "' y='" << h - 12
        << "' text-anchor='middle' font-size='13'>" << xlabel_ << "</text>\n"
        << "<text x='16' y='" << h / 2
        << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
        << h / 2 << ")'>" << ylabel_ << "</text>\n"
        << "<rect x='" << ml << "' y='" << mt << "' width='" << w - ml - mr
        << "' height='" << h - mt - mb
        << "' fill='none' stroke='black'/>\n";
    char buf[64];
    for (int k = 0; k <= 4; ++k) {
      const double xv = xmin + k * (xmax - xmin) / 4;
      const double yv = ymin + k * (ymax - ymin) / 4;
      std::snprintf(buf, sizeof(buf), "%.4g", xv);
      out << "<text x='" << px(xv) << "' y='" << h - mb + 18
          << "' text-anchor='middle' font-size='11'>" << buf << "</text>\n";
      std::snprintf(buf, sizeof(buf), "%.4g", yv);
      out << "<text x='" << ml - 6 << "' y='" << py(yv) + 4
          << "' text-anchor='end' font-size='11'>" << buf << "</text>\n";
    }
    static const char* colors[] = {"#1f77b4", "#2ca02c", "#d62728",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t li = 0; li < lines_.size(); ++li) {
      const auto& l = lines_[li];
      out << "<polyline fill='none' stroke='" << colors[li % 6]
          << "' stroke-width='1.5' points='";
      for (std::size_t i = 0; i < l.x.size(); ++i)
        out << px(l.x[i]) << "," << py(l.y[i]) << " ";
      out << "'/>\n";
      out << "<text x='" << w - mr - 8 << "' y='" << mt + 18 + 16 * li
          << "' text-anchor='end' font-size='12' fill='" << colors[li % 6]
          << "'>" << l.label << "</text>\n";
    }
    out << "</svg>\n";
  }

 private:
  struct Line {
    std::vector<double> x, y;
    std::string label;
  };
  std::string title_, xlabel_, ylabel_;
  std::vector<Line> lines_;
};

}  // namespace ptflow

#endif
