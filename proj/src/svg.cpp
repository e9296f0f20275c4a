#include "devmine/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace devmine::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string xml_escape(const std::string& s) {
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

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Scale {
  double lo, hi, px0, px1;
  double operator()(double v) const {
    double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return px0 + t * (px1 - px0);
  }
};

std::vector<double> ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  double raw = (hi - lo) / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  std::vector<double> out;
  double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + step * 1e-9; v += step) out.push_back(v);
  return out;
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       const std::string& meta) {
  const double width = 860, height = 520;
  const double ml = 70, mr = 160, mt = 50, mb = 60;

  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_lo = x_hi = x;
        y_lo = y_hi = y;
        first = false;
      }
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (y_hi == y_lo) y_hi = y_lo + 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  Scale sx{x_lo, x_hi, ml, width - mr};
  Scale sy{y_lo, y_hi, height - mb, mt};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  if (!meta.empty()) os << "<!-- " << xml_escape(meta) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" "
        "text-anchor=\"middle\">"
     << xml_escape(title) << "</text>\n";

  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  for (double t : ticks(x_lo, x_hi)) {
    double px = sx(t);
    os << "<line x1=\"" << px << "\" y1=\"" << height - mb << "\" x2=\"" << px << "\" y2=\""
       << height - mb + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << height - mb + 20
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(t)
       << "</text>\n";
  }
  for (double t : ticks(y_lo, y_hi)) {
    double py = sy(t);
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py << "\" x2=\"" << ml << "\" y2=\"" << py
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << py << "\" x2=\"" << width - mr << "\" y2=\"" << py
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(t)
       << "</text>\n";
  }
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 15
     << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
     << xml_escape(x_label) << "</text>\n";
  os << "<text x=\"20\" y=\"" << (mt + height - mb) / 2
     << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
        "20 "
     << (mt + height - mb) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) os << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
    os << "\"/>\n";
    for (const auto& [x, y] : series[i].points)
      os << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y)) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    double ly = mt + 18.0 * static_cast<double>(i);
    os << "<rect x=\"" << width - mr + 10 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" "
       << "fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << width - mr + 27 << "\" y=\"" << ly + 10
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(series[i].name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::string& meta) {
  const double width = 720;
  const double bar_h = 22, gap = 8;
  const double ml = 220, mr = 70, mt = 50, mb = 30;
  const double height = mt + mb + static_cast<double>(labels.size()) * (bar_h + gap);

  double v_hi = 0.0;
  for (double v : values) v_hi = std::max(v_hi, v);
  if (v_hi <= 0.0) v_hi = 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  if (!meta.empty()) os << "<!-- " << xml_escape(meta) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"15\" "
        "text-anchor=\"middle\">"
     << xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double y = mt + static_cast<double>(i) * (bar_h + gap);
    double w = (width - ml - mr) * (values[i] / v_hi);
    os << "<text x=\"" << ml - 8 << "\" y=\"" << y + bar_h - 6
       << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">"
       << xml_escape(labels[i]) << "</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << y << "\" width=\"" << fmt(std::max(w, 0.5))
       << "\" height=\"" << bar_h << "\" fill=\"" << kPalette[1] << "\"/>\n";
    os << "<text x=\"" << ml + std::max(w, 0.5) + 6 << "\" y=\"" << y + bar_h - 6
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(values[i]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace devmine::svg
