#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "lowrankcov/rates.hpp"

namespace lrc {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 220.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

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

struct Frame {
  double lx0, lx1, ly0, ly1;  // log10 ranges

  double px(double x) const {
    return kLeft + (std::log10(x) - lx0) / (lx1 - lx0) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (std::log10(y) - ly0) / (ly1 - ly0) * (kHeight - kTop - kBottom);
  }
};

}  // namespace

std::string rates_svg(const std::vector<RateSeries>& series, RateAxis axis) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (const auto* pts : {&s.points, &s.excluded}) {
      for (const auto& [x, y] : *pts) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  if (!std::isfinite(xmin)) xmin = 1, xmax = 10, ymin = 1, ymax = 10;
  Frame f{std::floor(std::log10(xmin)), std::ceil(std::log10(xmax)), std::floor(std::log10(ymin)),
          std::ceil(std::log10(ymax))};
  if (f.lx1 <= f.lx0) f.lx1 = f.lx0 + 1;
  if (f.ly1 <= f.ly0) f.ly1 = f.ly0 + 1;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Decade grid and tick labels.
  for (double d = f.lx0; d <= f.lx1; d += 1) {
    const double x = f.px(std::pow(10.0, d));
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(kHeight - kBottom) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(kHeight - kBottom + 18) +
           "\" text-anchor=\"middle\">1e" + std::to_string(static_cast<int>(d)) + "</text>\n";
  }
  for (double d = f.ly0; d <= f.ly1; d += 1) {
    const double y = f.py(std::pow(10.0, d));
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" +
           num(y) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(static_cast<int>(d)) + "</text>\n";
  }
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
         "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 15) +
         "\" text-anchor=\"middle\">" + (axis == RateAxis::N ? "n" : "l") + "</text>\n";
  out += "<text x=\"18\" y=\"" + num((kTop + kHeight - kBottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num((kTop + kHeight - kBottom) / 2) + ")\">MC risk</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const std::string color = kPalette[i % kPalette.size()];
    for (const auto& [x, y] : s.points) {
      out += "<circle cx=\"" + num(f.px(x)) + "\" cy=\"" + num(f.py(y)) + "\" r=\"3.5\" fill=\"" + color + "\"/>\n";
    }
    for (const auto& [x, y] : s.excluded) {
      out += "<circle cx=\"" + num(f.px(x)) + "\" cy=\"" + num(f.py(y)) + "\" r=\"3.5\" fill=\"none\" stroke=\"" +
             color + "\"/>\n";
    }
    const double x0 = s.points.front().first;
    const double x1 = s.points.back().first;
    auto line_y = [&](double x) { return std::exp(s.fit.intercept + s.fit.slope * std::log(x)); };
    out += "<line x1=\"" + num(f.px(x0)) + "\" y1=\"" + num(f.py(line_y(x0))) + "\" x2=\"" + num(f.px(x1)) +
           "\" y2=\"" + num(f.py(line_y(x1))) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    std::string label = s.estimator;
    if (!s.group.empty()) label += " (" + s.group + ")";
    char slope[48];
    std::snprintf(slope, sizeof(slope), "slope %.3f", s.fit.slope);
    const double ly = kTop + 16 + 34 * static_cast<double>(i);
    out += "<rect x=\"" + num(kWidth - kRight + 12) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           color + "\"/>\n";
    out += "<text x=\"" + num(kWidth - kRight + 28) + "\" y=\"" + num(ly) + "\">" + escape(label) + "</text>\n";
    out += "<text x=\"" + num(kWidth - kRight + 28) + "\" y=\"" + num(ly + 15) + "\">" + slope + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace lrc
