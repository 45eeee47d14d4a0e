#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qwalk/evolution.hpp"
#include "qwalk/observables.hpp"

namespace qwalk {

/// One grid as read back from long-format CSV.
struct GridRecord {
  double z = 0.0;
  ProbabilityGrid grid;
};

/// Long format: header "z,row,col,probability", one line per site.
void write_grid_csv(std::ostream& out, double z, const ProbabilityGrid& grid);

/// Reads every grid in a long-format file, grouped by z in file order. Each
/// (row, col) of the inferred rectangle must appear exactly once per z.
std::vector<GridRecord> read_grid_csv(std::istream& in,
                                      const std::string& source = "<grid>");

/// Header "z,value".
void write_series_csv(std::ostream& out, const ObservableSeries& series);
ObservableSeries read_series_csv(std::istream& in,
                                 const std::string& source = "<series>");

/// Header "z,axis,index,value" with axis "x" (columns) or "y" (rows).
void write_projections_csv(std::ostream& out, double z, const Projections& p);

}  // namespace qwalk
