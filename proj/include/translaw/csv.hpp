#pragma once
// CSV input/output. All readers attribute problems to their source as
// "path:line: message" and reject columns they do not know, so a typo in a
// header fails loudly instead of silently dropping data. All writers go
// through a temporary file plus rename, so readers of the target path never
// observe a half-written file.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "translaw/law.hpp"

namespace translaw {

// Header must contain n and error; s and group are optional (defaults 1 and
// ""). Column order is free. Blank lines are skipped.
std::vector<Observation> read_observations(const std::string& path);

// Writes n,s,error[,group]; the group column appears only when some
// observation carries a label. Doubles round-trip exactly (%.17g).
void write_observations(const std::string& path, const std::vector<Observation>& obs);

// Headerless numeric matrix, one row per line; all rows must have the same
// number of fields.
Eigen::MatrixXd read_activations(const std::string& path);

// A fitted curve sampled on a grid, optionally next to the data it was fit
// to. observed is either empty or the same length as x; NaN entries mark
// grid points with no measurement and round-trip as empty cells.
struct PlotSeries {
  std::string x_name = "n";
  std::vector<double> x;
  std::vector<double> predicted;
  std::vector<double> observed;
};

void write_plot(const std::string& path, const PlotSeries& series);
PlotSeries read_plot(const std::string& path);

// Shared atomic write primitive (temporary file in the target directory,
// then rename over the destination).
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace translaw
