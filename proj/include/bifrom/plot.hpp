#pragma once

#include <iosfwd>

#include "bifrom/eval.hpp"

namespace bifrom::plot {

// Parses the diagram CSV written by eval::write_diagram_csv.
eval::BifurcationDiagram read_diagram_csv(std::istream& in);

// Heatmap of the observable over the parameter box: one cell per grid point,
// mu1 to the right, mu2 upward, with a color bar. Points flagged as not
// converged are drawn grey. Needs a full tensor grid.
void write_svg(std::ostream& out, const eval::BifurcationDiagram& diagram);

// Plain columns `mu1 mu2 value`, one point per line, header first.
void write_columns(std::ostream& out, const eval::BifurcationDiagram& diagram);

}  // namespace bifrom::plot
