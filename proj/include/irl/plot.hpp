#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "irl/mdp.hpp"

namespace irl {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with a legend. In log-log mode non-positive points are dropped.
/// Throws std::invalid_argument when there is nothing to draw.
std::string convergence_svg(const std::vector<Series>& series, const std::string& x_label,
                            const std::string& y_label, bool loglog, const std::string& title = "");

/// Grid of colored cells, row 0 at the top. Cell values are printed for small grids.
std::string heatmap_svg(const TableD& values, const std::string& title);

// Plain numeric matrix, one row per line, comma separated.
void write_matrix_csv(std::ostream& os, const TableD& m);
TableD read_matrix_csv(std::istream& is);

}  // namespace irl
