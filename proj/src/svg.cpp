#include "llmrel/svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace llmrel::svg {

namespace {

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

void axes(std::string& out, const PlotFrame& f, std::string_view xlabel, std::string_view ylabel,
          std::string_view title) {
    out += fmt::format(
        R"~(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" style="fill:none;stroke:#333;stroke-width:1"/>)~"
        "\n",
        f.left, f.top, f.width, f.height);
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        out += fmt::format(R"~(<text x="{:.2f}" y="{:.2f}" style="font:10px sans-serif;text-anchor:middle">{:.2f}</text>)~"
                           "\n",
                           f.px(v), f.top + f.height + 14.0, v);
        out += fmt::format(R"~(<text x="{:.2f}" y="{:.2f}" style="font:10px sans-serif;text-anchor:end">{:.2f}</text>)~"
                           "\n",
                           f.left - 6.0, f.py(v) + 3.0, v);
    }
    out += fmt::format(R"~(<text x="{:.2f}" y="{:.2f}" style="font:12px sans-serif;text-anchor:middle">{}</text>)~"
                       "\n",
                       f.left + f.width / 2.0, f.top + f.height + 32.0, escape(xlabel));
    out += fmt::format(
        R"~(<text x="{:.2f}" y="{:.2f}" transform="rotate(-90 {:.2f} {:.2f})" style="font:12px sans-serif;text-anchor:middle">{}</text>)~"
        "\n",
        f.left - 40.0, f.top + f.height / 2.0, f.left - 40.0, f.top + f.height / 2.0, escape(ylabel));
    out += fmt::format(R"~(<text x="{:.2f}" y="{:.2f}" style="font:bold 13px sans-serif;text-anchor:middle">{}</text>)~"
                       "\n",
                       f.left + f.width / 2.0, f.top - 10.0, escape(title));
}

void diagonal(std::string& out, const PlotFrame& f) {
    out += fmt::format(
        R"~(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" style="stroke:#999;stroke-dasharray:4 3;stroke-width:1"/>)~"
        "\n",
        f.px(0.0), f.py(0.0), f.px(1.0), f.py(1.0));
}

// Refusal rate 0 -> blue, 1 -> red.
std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(40 + 200 * t));
    const int b = static_cast<int>(std::lround(220 - 180 * t));
    return fmt::format("#{:02x}50{:02x}", r, b);
}

}  // namespace

std::string fig2_panels(const Fig2Report& report, double target) {
    std::string out;
    out += R"~(<svg xmlns="http://www.w3.org/2000/svg" width="860" height="420" viewBox="0 0 860 420">)~"
           "\n";
    out += R"~(<rect x="0" y="0" width="860" height="420" style="fill:#fff"/>)~"
           "\n";

    const PlotFrame left{60.0, 30.0, 320.0, 320.0};
    axes(out, left, "confidence (calibrated)", "accuracy", fmt::format("reliability, smECE = {:.3f}", report.smece_calibrated));

    // Histogram, scaled so the tallest stacked bar reaches 40% of the panel.
    std::size_t tallest = 1;
    for (std::size_t i = 0; i < report.hist_correct.size(); ++i)
        tallest = std::max(tallest, report.hist_correct[i] + report.hist_incorrect[i]);
    const auto& bins = report.reliability.bins;
    for (std::size_t i = 0; i < bins.size() && i < report.hist_correct.size(); ++i) {
        const double x0 = left.px(bins[i].lo);
        const double w = left.px(bins[i].hi) - x0;
        const double hc = 0.4 * left.height * static_cast<double>(report.hist_correct[i]) / static_cast<double>(tallest);
        const double hi = 0.4 * left.height * static_cast<double>(report.hist_incorrect[i]) / static_cast<double>(tallest);
        const double base = left.py(0.0);
        out += fmt::format(
            R"~(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" style="fill:#9ecae1;fill-opacity:0.7"/>)~"
            "\n",
            x0, base - hc, w, hc);
        out += fmt::format(
            R"~(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" style="fill:#fc9272;fill-opacity:0.7"/>)~"
            "\n",
            x0, base - hc - hi, w, hi);
    }
    diagonal(out, left);
    std::string pts;
    for (const auto& b : bins) {
        if (!b.mean_confidence) continue;
        pts += fmt::format("{:.2f},{:.2f} ", left.px(*b.mean_confidence), left.py(*b.mean_accuracy));
    }
    if (!pts.empty()) {
        pts.pop_back();
        out += fmt::format(R"~(<polyline points="{}" style="fill:none;stroke:#08519c;stroke-width:2"/>)~"
                           "\n",
                           pts);
    }

    const PlotFrame right{500.0, 30.0, 320.0, 320.0};
    axes(out, right, "total error", "utility", "utility-error tradeoff");
    std::string curve;
    for (const auto& p : report.curve.points)
        curve += fmt::format("{:.2f},{:.2f} ", right.px(p.total_error), right.py(p.utility));
    if (!curve.empty()) {
        curve.pop_back();
        out += fmt::format(R"~(<polyline points="{}" style="fill:none;stroke:#238b45;stroke-width:2"/>)~"
                           "\n",
                           curve);
    }
    if (auto it = report.tax_at_targets.find(target); it != report.tax_at_targets.end()) {
        const auto& op = it->second;
        out += fmt::format(
            R"~(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" style="stroke:#cb181d;stroke-dasharray:3 3;stroke-width:1"/>)~"
            "\n",
            right.px(target), right.py(0.0), right.px(target), right.py(1.0));
        out += fmt::format(R"~(<circle cx="{:.2f}" cy="{:.2f}" r="4" style="fill:#cb181d"/>)~"
                           "\n",
                           right.px(op.total_error), right.py(op.utility));
        out += fmt::format(R"~(<text x="{:.2f}" y="{:.2f}" style="font:11px sans-serif">discard {:.0f}%</text>)~"
                           "\n",
                           right.px(op.total_error) + 6.0, right.py(op.utility) - 6.0, 100.0 * op.discard_fraction);
    }
    out += "</svg>\n";
    return out;
}

std::string scatter_plot(const ScatterTable& table) {
    const PlotFrame f = kScatterFrame;
    std::string out;
    out += R"~(<svg xmlns="http://www.w3.org/2000/svg" width="520" height="500" viewBox="0 0 520 500">)~"
           "\n";
    out += R"~(<rect x="0" y="0" width="520" height="500" style="fill:#fff"/>)~"
           "\n";
    axes(out, f, "attempted accuracy", "accuracy", "accuracy vs attempted accuracy");
    out += fmt::format(
        R"~(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" style="stroke:#999;stroke-dasharray:4 3;stroke-width:1"/>)~"
        "\n",
        f.px(table.diagonal_from.first), f.py(table.diagonal_from.second), f.px(table.diagonal_to.first),
        f.py(table.diagonal_to.second));
    out += fmt::format(R"~(<text x="{:.2f}" y="{:.2f}" style="font:16px sans-serif;fill:#e6550d;text-anchor:middle">&#9733;</text>)~"
                       "\n",
                       f.px(table.ideal.first), f.py(table.ideal.second) + 5.0);
    for (const auto& p : table.points) {
        out += fmt::format(
            R"~(<circle cx="{:.3f}" cy="{:.3f}" r="5" style="fill:{};stroke:#222;stroke-width:0.5"><title>{}</title></circle>)~"
            "\n",
            f.px(p.attempted_accuracy), f.py(p.accuracy), ramp(p.refusal_rate), escape(p.model));
    }
    out += "</svg>\n";
    return out;
}

}  // namespace llmrel::svg
