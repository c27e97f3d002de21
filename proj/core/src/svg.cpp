#include "follmer/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace follmer::cli {

namespace {

constexpr double kWidth = 480;
constexpr double kHeight = 480;
constexpr double kMargin = 40;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    default: out += c;
    }
  }
  return out;
}

} // namespace

void write_scatter_svg(std::ostream& out, const std::vector<ScatterSeries>& series, const std::string& title) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) {
    x0 -= 1;
    x1 += 1;
  }
  if (!(y1 > y0)) {
    y0 -= 1;
    y1 += 1;
  }
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto sx = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << escape(title) << "</text>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - 12 << "\" font-family=\"sans-serif\" font-size=\"10\">"
      << num(x0) << "</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(x1) << "</text>\n";
  out << "<text x=\"4\" y=\"" << kHeight - kMargin << "\" font-family=\"sans-serif\" font-size=\"10\">" << num(y0)
      << "</text>\n";
  out << "<text x=\"4\" y=\"" << kMargin + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">" << num(y1)
      << "</text>\n";

  double legend_y = kMargin + 14;
  for (const auto& s : series) {
    out << "<g fill=\"" << escape(s.color) << "\" fill-opacity=\"0.45\">\n";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i])) << "\" r=\"1.3\"/>\n";
    }
    out << "</g>\n";
    out << "<text x=\"" << kWidth - kMargin - 6 << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << escape(s.color) << "\">"
        << escape(s.label) << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
}

} // namespace follmer::cli
