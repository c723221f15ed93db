#pragma once

// Minimal self-contained SVG plots. Fixed canvas, inline styles, no timestamps.

#include <string>

#include "llmrel/frontier.hpp"
#include "llmrel/sim.hpp"

namespace llmrel::svg {

/// Maps the unit square onto a pixel rectangle (y grows downwards).
struct PlotFrame {
    double left = 60.0;
    double top = 30.0;
    double width = 320.0;
    double height = 320.0;

    double px(double x) const { return left + x * width; }
    double py(double y) const { return top + (1.0 - y) * height; }
};

/// Fixed frame of the scatter plot, exposed so callers can locate points.
inline constexpr PlotFrame kScatterFrame{70.0, 40.0, 400.0, 400.0};

/// Left: reliability diagram over the class histogram. Right: utility vs total
/// error with the operating point for `target` marked when present.
std::string fig2_panels(const Fig2Report& report, double target);

/// Attempted accuracy (x) against accuracy (y), coloured by refusal rate.
std::string scatter_plot(const ScatterTable& table);

}  // namespace llmrel::svg
