#include "ecd/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace ecd {

std::string profile_csv(const DensityProfile& profile) {
    std::string out = "grid,green,blue\n";
    for (std::size_t i = 0; i < profile.grid.size(); ++i) {
        out += fmt::format("{:.10g},{:.10g},{:.10g}\n", profile.grid[i], profile.green_density[i],
                           profile.blue_density[i]);
    }
    return out;
}

std::string profile_svg(const DensityProfile& profile, const std::string& title) {
    constexpr double kWidth = 800, kHeight = 400, kMargin = 50;
    const double x_lo = profile.grid.front();
    const double x_hi = profile.grid.back();
    double y_hi = 0.0;
    for (std::size_t i = 0; i < profile.grid.size(); ++i) {
        y_hi = std::max({y_hi, profile.green_density[i], profile.blue_density[i]});
    }
    if (y_hi <= 0.0) y_hi = 1.0;
    const double x_span = x_hi > x_lo ? x_hi - x_lo : 1.0;

    auto px = [&](double x) { return kMargin + (x - x_lo) / x_span * (kWidth - 2 * kMargin); };
    auto py = [&](double y) { return kHeight - kMargin - y / y_hi * (kHeight - 2 * kMargin); };
    auto polyline = [&](const std::vector<double>& density, const char* colour) {
        std::string pts;
        for (std::size_t i = 0; i < profile.grid.size(); ++i) {
            pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(profile.grid[i]), py(density[i]));
        }
        return fmt::format("  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", colour, pts);
    };
    auto peak_marker = [&](double peak, const char* colour, const char* label) {
        return fmt::format(
            "  <line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\" stroke-dasharray=\"4,4\"/>\n"
            "  <text x=\"{0:.2f}\" y=\"{4:.2f}\" fill=\"{3}\" font-size=\"12\" text-anchor=\"middle\">{5} peak {6:.4g}</text>\n",
            px(peak), py(0), py(y_hi), colour, kMargin - 8, label, peak);
    };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "  <text x=\"{2}\" y=\"20\" font-size=\"14\">{3}</text>\n"
        "  <line x1=\"{4:.2f}\" y1=\"{5:.2f}\" x2=\"{6:.2f}\" y2=\"{5:.2f}\" stroke=\"black\"/>\n",
        kWidth, kHeight, kMargin, title, px(x_lo), py(0), px(x_hi));
    if (x_lo <= 0.0 && x_hi >= 0.0) {
        svg += fmt::format("  <line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"grey\"/>\n", px(0),
                           py(0), py(y_hi));
    }
    svg += fmt::format("  <text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\">{:.4g}</text>\n", px(x_lo), py(0) + 16, x_lo);
    svg += fmt::format("  <text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n",
                       px(x_hi), py(0) + 16, x_hi);
    svg += polyline(profile.green_density, "green");
    svg += polyline(profile.blue_density, "blue");
    svg += peak_marker(profile.green_peak, "green", "missing");
    svg += peak_marker(profile.blue_peak, "blue", "added");
    svg += "</svg>\n";
    return svg;
}

json peaks_json(const DensityProfile& profile) {
    json j;
    j["green_peak"] = profile.green_peak;
    j["blue_peak"] = profile.blue_peak;
    j["green_bandwidth"] = profile.green_bandwidth;
    j["blue_bandwidth"] = profile.blue_bandwidth;
    j["grid_size"] = profile.grid.size();
    j["grid_min"] = profile.grid.front();
    j["grid_max"] = profile.grid.back();
    j["n_pairs"] = profile.n_pairs;
    return j;
}

}  // namespace ecd
