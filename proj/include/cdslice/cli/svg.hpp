#pragma once

#include <string>
#include <vector>

namespace cdslice::cli::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
};

/// Polyline per series with markers omitted. Non-finite points break the line.
std::string line_chart(const Axes& axes, const std::vector<Series>& series);

/// Point cloud of (x, y) pairs; `identity_line` adds the y = x reference.
std::string scatter_chart(const Axes& axes, const std::vector<double>& x, const std::vector<double>& y,
                          bool identity_line);

/// Bars spanning [edges[i], edges[i+1]) with heights `values` (may be negative).
std::string bar_chart(const Axes& axes, const std::vector<double>& edges, const std::vector<double>& values);

/// Evenly spaced "nice" tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 6);

}  // namespace cdslice::cli::svg
