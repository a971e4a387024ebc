#pragma once

#include <string>
#include <vector>

namespace egokit::cli {

struct BarGroup {
    std::string label;                 // x-axis group (e.g. conditioning variant)
    std::vector<double> values;        // one bar per series
    std::vector<double> whiskers;      // symmetric error per bar
};

/// Minimal static bar chart: axes, grouped bars, error whiskers, legend.
void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::string& y_label,
                         const std::vector<std::string>& series_names,
                         const std::vector<BarGroup>& groups);

}  // namespace egokit::cli
