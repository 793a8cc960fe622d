#pragma once

#include <string>
#include <vector>

namespace flipline::cli {

struct Series {
    std::string label;
    std::vector<double> x, y;
    bool dashed = false;
    bool markers = false;  // draw points instead of a line
};

struct Marker {
    double x;
    std::string label;
    bool arrow = false;  // arrow at the bottom axis instead of a vertical line
};

struct Plot {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
    std::vector<Marker> markers;
    double y_lo = 0.0, y_hi = 0.0;  // equal: fit to data
};

// Standalone SVG document; the config hash goes into <metadata>.
std::string render_svg(const Plot& p, const std::string& hash);

}  // namespace flipline::cli
