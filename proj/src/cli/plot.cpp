#include "delan/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace delan::cli {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kSeries[] = {"L_IL", "L_RL", "L_IH", "L_LO"};
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};

}  // namespace

LogTable read_log(std::istream& in) {
  LogTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("log: empty input");
  t.header = split_csv(line);
  for (const auto& h : t.header) t.columns[h];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != t.header.size())
      throw std::invalid_argument(fmt::format("log: row {} has {} cells, expected {}", t.rows + 1, cells.size(),
                                              t.header.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!cells[i].empty()) {
        std::size_t used = 0;
        try {
          v = std::stod(cells[i], &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != cells[i].size())
          throw std::invalid_argument(fmt::format("log: bad number '{}' in column {}", cells[i], t.header[i]));
      }
      t.columns[t.header[i]].push_back(v);
    }
    ++t.rows;
  }
  return t;
}

std::string loss_curves_svg(const LogTable& log) {
  for (const char* c : {"iter", "L_IL", "L_RL", "L_IH", "L_LO"})
    if (!log.columns.count(c)) throw std::invalid_argument(fmt::format("log: missing column '{}'", c));
  if (log.rows == 0) throw std::invalid_argument("log: no data rows");

  constexpr double W = 640, H = 400, left = 60, right = 140, top = 20, bottom = 40;
  const auto& xs = log.columns.at("iter");
  double x0 = *std::min_element(xs.begin(), xs.end()), x1 = *std::max_element(xs.begin(), xs.end());
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const char* s : kSeries)
    for (double v : log.columns.at(s))
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  const auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<g stroke=\"black\" stroke-width=\"1\">\n"
      "<line x1=\"{2}\" y1=\"{3}\" x2=\"{4}\" y2=\"{3}\"/>\n"
      "<line x1=\"{2}\" y1=\"{5}\" x2=\"{2}\" y2=\"{3}\"/>\n"
      "</g>\n"
      "<g font-family=\"sans-serif\" font-size=\"11\">\n"
      "<text x=\"{2}\" y=\"{6}\">{7}</text>\n"
      "<text x=\"{4}\" y=\"{6}\" text-anchor=\"end\">{8}</text>\n"
      "<text x=\"{9}\" y=\"{3}\" text-anchor=\"end\">{10:.4g}</text>\n"
      "<text x=\"{9}\" y=\"{11}\" text-anchor=\"end\">{12:.4g}</text>\n"
      "<text x=\"{13}\" y=\"{6}\" text-anchor=\"middle\">iteration</text>\n"
      "</g>\n",
      W, H, left, H - bottom, W - right, top, H - bottom + 16, x0, x1, left - 4, y0, top + 8, y1,
      (left + W - right) / 2);

  for (std::size_t s = 0; s < 4; ++s) {
    const auto& ys = log.columns.at(kSeries[s]);
    std::string points;
    for (std::size_t i = 0; i < log.rows; ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
      points += fmt::format("{}{:.2f},{:.2f}", points.empty() ? "" : " ", px(xs[i]), py(ys[i]));
    }
    svg += fmt::format(
        "<polyline class=\"series\" data-name=\"{0}\" fill=\"none\" stroke=\"{1}\" stroke-width=\"1.5\" "
        "points=\"{2}\"/>\n"
        "<text x=\"{3}\" y=\"{4}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{1}\">{0}</text>\n",
        kSeries[s], kColors[s], points, W - right + 12, top + 16 + 18 * s);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace delan::cli
