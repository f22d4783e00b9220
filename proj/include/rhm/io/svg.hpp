#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhm/bytes.hpp"
#include "rhm/timeline.hpp"

namespace rhm::io {

// Health-index line plot for one wheel, with the ground-truth zones shaded
// behind the series and the detection threshold as a dashed line.
inline void write_health_svg(const std::filesystem::path& path, uint32_t wheel_id,
                             const std::map<std::string, std::vector<std::pair<double, double>>>&
                                 series_by_detector,  // (day, value)
                             const std::optional<ZoneAnnotation>& annotation, double threshold,
                             int monitoring_days) {
    const double width = 900, height = 300;
    const double ml = 50, mr = 10, mt = 28, mb = 30;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double y_max = std::max(2.0, threshold * 1.5);
    for (const auto& [name, pts] : series_by_detector)
        for (const auto& [d, v] : pts) y_max = std::max(y_max, std::min(v, 8.0));
    const double y_min = -1.0;

    auto sx = [&](double day) { return ml + pw * day / std::max(1, monitoring_days); };
    auto sy = [&](double v) {
        const double c = std::clamp(v, y_min, y_max);
        return mt + ph * (1.0 - (c - y_min) / (y_max - y_min));
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string((int)width) +
           "\" height=\"" + std::to_string((int)height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    auto zone_rect = [&](double d0, double d1, const char* color) {
        svg += "<rect x=\"" + std::to_string(sx(d0)) + "\" y=\"" + std::to_string(mt) +
               "\" width=\"" + std::to_string(std::max(0.0, sx(d1) - sx(d0))) + "\" height=\"" +
               std::to_string(ph) + "\" fill=\"" + color + "\" opacity=\"0.25\"/>\n";
    };
    if (annotation) {
        zone_rect(0, annotation->green_end_day, "#4caf50");
        zone_rect(annotation->green_end_day, annotation->red_start_day, "#ff9800");
        zone_rect(annotation->red_start_day, annotation->monitoring_end_day, "#f44336");
    }

    svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(sy(threshold)) +
           "\" x2=\"" + std::to_string(ml + pw) + "\" y2=\"" + std::to_string(sy(threshold)) +
           "\" stroke=\"#444\" stroke-dasharray=\"6 4\"/>\n";

    static const char* kColors[] = {"#1565c0", "#6a1b9a", "#2e7d32", "#c62828"};
    int ci = 0;
    double legend_x = ml + 6;
    for (const auto& [name, pts] : series_by_detector) {
        const char* color = kColors[ci++ % 4];
        std::string poly;
        for (const auto& [d, v] : pts)
            poly += std::to_string(sx(d)) + "," + std::to_string(sy(v)) + " ";
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.2\" points=\"" + poly + "\"/>\n";
        svg += "<text x=\"" + std::to_string(legend_x) + "\" y=\"" + std::to_string(mt - 8) +
               "\" fill=\"" + color + "\" font-size=\"12\">" + name + "</text>\n";
        legend_x += 9.0 * (name.size() + 2);
    }

    svg += "<text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(height - 8) +
           "\" font-size=\"12\">wheel " + std::to_string(wheel_id) +
           " &#8212; health index over days (threshold " + std::to_string(threshold) + ")</text>\n";
    svg += "</svg>\n";
    atomic_write_text(path, svg);
}

}  // namespace rhm::io
