#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bladerom::svg {

struct Line {
    std::vector<double> x;
    std::vector<double> y;
    std::string label;
    std::string color = "#1f77b4";
    bool markers = false; ///< draw points instead of a polyline
};

/// Shaded region between two curves sharing an abscissa.
struct Band {
    std::vector<double> x;
    std::vector<double> lower;
    std::vector<double> upper;
    std::string color = "#1f77b4";
};

/// Histogram bars from bin edges and counts.
struct Bars {
    std::vector<double> edges;
    std::vector<double> counts;
    std::string label;
    std::string color = "#1f77b4";
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Band> bands;
    std::vector<Bars> bars;
    std::vector<Line> lines;
};

/// Standalone SVG document. Coordinates are printed with two decimals so the
/// output is stable across platforms for identical inputs.
std::string render(const Plot& plot);

void write(const std::filesystem::path& path, const Plot& plot);

/// Colour for series `index` from a fixed qualitative palette.
std::string palette(std::size_t index);

} // namespace bladerom::svg
