#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace delan::cli {

/// Columns of a training log keyed by header name. Empty cells read as NaN.
struct LogTable {
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> columns;
  std::size_t rows = 0;
};

LogTable read_log(std::istream& in);

/// Loss curves (L_IL, L_RL, L_IH, L_LO against iter) as a standalone SVG.
std::string loss_curves_svg(const LogTable& log);

}  // namespace delan::cli
