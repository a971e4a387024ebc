#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace egokit::cli {

void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::string& y_label,
                         const std::vector<std::string>& series_names,
                         const std::vector<BarGroup>& groups) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);

    const double width = 760, height = 420;
    const double left = 70, right = 40, top = 50, bottom = 70;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double max_value = 1e-9;
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const double whisker = i < g.whiskers.size() ? g.whiskers[i] : 0.0;
            max_value = std::max(max_value, g.values[i] + whisker);
        }
    }
    max_value *= 1.1;

    const char* palette[] = {"#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4",
                             "#8c613c"};
    const int palette_size = 6;

    char buf[512];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">%s"
                  "</text>\n",
                  width / 2, title.c_str());
    out << buf;

    // Axes and horizontal gridlines with tick labels.
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  left, top, left, top + plot_h);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  left, top + plot_h, left + plot_w, top + plot_h);
    out << buf;
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = max_value * tick / 5.0;
        const double y = top + plot_h * (1.0 - static_cast<double>(tick) / 5.0);
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                      "stroke=\"#dddddd\"/>\n",
                      left, y, left + plot_w, y);
        out << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                      left - 6, y + 4, v);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 18 %.1f)\">%s</text>\n",
                  top + plot_h / 2, top + plot_h / 2, y_label.c_str());
    out << buf;

    // Grouped bars with whiskers.
    const std::size_t series = series_names.size();
    const double group_w = plot_w / std::max<std::size_t>(1, groups.size());
    const double bar_w = 0.8 * group_w / std::max<std::size_t>(1, series);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const BarGroup& g = groups[gi];
        const double gx = left + gi * group_w + 0.1 * group_w;
        for (std::size_t si = 0; si < g.values.size(); ++si) {
            const double v = g.values[si];
            const double h = plot_h * v / max_value;
            const double x = gx + si * bar_w;
            const double y = top + plot_h - h;
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                          "fill=\"%s\"/>\n",
                          x, y, bar_w * 0.92, h, palette[si % palette_size]);
            out << buf;
            const double whisker = si < g.whiskers.size() ? g.whiskers[si] : 0.0;
            if (whisker > 0.0) {
                const double cx = x + bar_w * 0.46;
                const double y_lo = top + plot_h * (1.0 - (v - whisker) / max_value);
                const double y_hi = top + plot_h * (1.0 - (v + whisker) / max_value);
                std::snprintf(
                    buf, sizeof(buf),
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                    cx, y_lo, cx, y_hi, cx - 4, y_lo, cx + 4, y_lo, cx - 4, y_hi, cx + 4, y_hi);
                out << buf;
            }
        }
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                      gx + 0.4 * group_w, top + plot_h + 18, g.label.c_str());
        out << buf;
    }

    // Legend.
    for (std::size_t si = 0; si < series; ++si) {
        const double x = left + 10 + 140.0 * si;
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"12\" fill=\"%s\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                      x, height - 24.0, palette[si % palette_size], x + 16, height - 14.0,
                      series_names[si].c_str());
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace egokit::cli
