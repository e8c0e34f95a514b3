#include "ecd/ragability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecd/error.hpp"
#include "ecd/parallel.hpp"

namespace ecd {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double resolve_bandwidth(std::span<const double> samples, std::optional<double> bandwidth) {
    if (bandwidth) {
        if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) throw InputError("bandwidth must be finite and > 0");
        return *bandwidth;
    }
    return silverman_bandwidth(samples);
}

}  // namespace

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::kNoContext: return "no_context";
        case Scenario::kPerfectContext: return "perfect_context";
        case Scenario::kWebContext: return "web_context";
        case Scenario::kSynthesizedContext: return "synthesized_context";
    }
    return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view tag) {
    for (auto s : {Scenario::kNoContext, Scenario::kPerfectContext, Scenario::kWebContext,
                   Scenario::kSynthesizedContext}) {
        if (to_string(s) == tag) return s;
    }
    return std::nullopt;
}

ScenarioRun score_run(Scenario scenario, std::span<const DocumentPair> pairs, const EcdConfig& cfg, unsigned jobs) {
    cfg.validate();
    ScenarioRun run{scenario, cfg, std::vector<ScoredPair>(pairs.size())};
    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        const auto& p = pairs[i];
        run.pairs[i] = ScoredPair{p.context->doc.id, p.generated->doc.id, ecd_score(*p.context, *p.generated, cfg)};
    });
    return run;
}

ShiftSamples shift_values(const ScenarioRun& run) {
    if (run.pairs.empty()) throw InputError("scenario run has no pairs");
    ShiftSamples out;
    out.green.reserve(run.pairs.size());
    out.blue.reserve(run.pairs.size());
    for (const auto& p : run.pairs) {
        const auto& b = p.breakdown;
        out.green.push_back(b.mean_common + b.me_penalty);
        out.blue.push_back(0.0 - (b.mean_common + b.ae_penalty));  // 0.0 - x keeps +0 for self pairs
    }
    return out;
}

double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw DegenerateError("degenerate sample: need at least 2 samples for a bandwidth");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    if (!(spread > 0.0)) throw DegenerateError("degenerate sample: all values identical");
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> kde_evaluate(std::span<const double> samples, double bandwidth, std::span<const double> grid) {
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> density(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double x : samples) {
            const double z = (grid[g] - x) / bandwidth;
            acc += std::exp(-0.5 * z * z);
        }
        density[g] = acc * norm;
    }
    return density;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t size) {
    if (size < 2) throw InputError("grid needs at least 2 points");
    std::vector<double> grid(size);
    const double step = (hi - lo) / static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i) grid[i] = lo + step * static_cast<double>(i);
    grid.back() = hi;
    return grid;
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
    double area = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) area += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    return area;
}

KdeCurve kde(std::span<const double> samples, std::size_t grid_size, std::optional<double> bandwidth) {
    if (samples.empty()) throw InputError("kde needs at least one sample");
    KdeCurve curve;
    curve.bandwidth = resolve_bandwidth(samples, bandwidth);
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    curve.grid = linear_grid(*lo - 3.0 * curve.bandwidth, *hi + 3.0 * curve.bandwidth, grid_size);
    curve.density = kde_evaluate(samples, curve.bandwidth, curve.grid);
    curve.peak = curve.grid[argmax(curve.density)];
    return curve;
}

DensityProfile profile(const ScenarioRun& run, const ProfileOptions& options) {
    const ShiftSamples samples = shift_values(run);
    DensityProfile out;
    out.n_pairs = run.pairs.size();
    out.green_bandwidth = resolve_bandwidth(samples.green, options.bandwidth);
    out.blue_bandwidth = resolve_bandwidth(samples.blue, options.bandwidth);

    const auto [glo, ghi] = std::minmax_element(samples.green.begin(), samples.green.end());
    const auto [blo, bhi] = std::minmax_element(samples.blue.begin(), samples.blue.end());
    const double lo = std::min(*glo - 3.0 * out.green_bandwidth, *blo - 3.0 * out.blue_bandwidth);
    const double hi = std::max(*ghi + 3.0 * out.green_bandwidth, *bhi + 3.0 * out.blue_bandwidth);
    out.grid = linear_grid(lo, hi, options.grid_size);

    out.green_density = kde_evaluate(samples.green, out.green_bandwidth, out.grid);
    out.blue_density = kde_evaluate(samples.blue, out.blue_bandwidth, out.grid);
    out.green_peak = out.grid[argmax(out.green_density)];
    out.blue_peak = out.grid[argmax(out.blue_density)];
    return out;
}

OrderingReport ordering_robustness(std::span<const AnnotatedDocument> context_variants,
                                   std::span<const AnnotatedDocument> generated, const EcdConfig& cfg) {
    if (context_variants.size() != generated.size()) {
        throw InputError("ordering study needs one generation per context variant (" +
                         std::to_string(context_variants.size()) + " vs " + std::to_string(generated.size()) + ")");
    }
    if (context_variants.empty()) throw InputError("ordering study needs at least one variant");

    OrderingReport report;
    for (std::size_t i = 0; i < context_variants.size(); ++i) {
        report.per_variant_totals.push_back(ecd_score(context_variants[i], generated[i], cfg).total);
    }
    const auto& totals = report.per_variant_totals;
    const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
    report.range = *hi - *lo;
    if (report.range == 0.0) return report;
    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= static_cast<double>(totals.size());
    double ss = 0.0;
    for (double t : totals) ss += (t - mean) * (t - mean);
    report.dispersion = std::sqrt(ss / static_cast<double>(totals.size()));
    return report;
}

}  // namespace ecd
