#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace follmer::cli {

struct ScatterSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

//! Static scatter plot, one panel, shared axes fitted to all series.
void write_scatter_svg(std::ostream& out, const std::vector<ScatterSeries>& series, const std::string& title);

} // namespace follmer::cli
