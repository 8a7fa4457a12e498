#pragma once

#include "pooltrend/summary.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pooltrend {

struct OverlayCurve {
  std::vector<double> times;
  std::vector<double> values;
};

struct PlotSpec {
  CurveSummary summary;                      // median + band
  std::vector<double> rug_times;             // observation rug marks
  std::vector<OverlayCurve> overlays;        // e.g. replicate medians
  std::optional<OverlayCurve> truth;         // dashed reference curve
  std::string title;
};

// Self-contained SVG: shaded 95% band, median curve, optional overlays and
// truth curve, rug marks at observation times.
void write_curve_svg(const std::string& path, const PlotSpec& spec);

}  // namespace pooltrend
