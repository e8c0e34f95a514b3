#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecd/metric.hpp"

namespace ecd {

enum class Scenario { kNoContext, kPerfectContext, kWebContext, kSynthesizedContext };

std::string_view to_string(Scenario s);
/// Accepts "no_context", "perfect_context", "web_context", "synthesized_context".
std::optional<Scenario> parse_scenario(std::string_view tag);

struct ScoredPair {
    std::string context_id;
    std::string generated_id;
    EcdBreakdown breakdown;
};

/// Every pair of a run is scored with the same config.
struct ScenarioRun {
    Scenario scenario = Scenario::kWebContext;
    EcdConfig config;
    std::vector<ScoredPair> pairs;
};

struct DocumentPair {
    const AnnotatedDocument* context = nullptr;
    const AnnotatedDocument* generated = nullptr;
};

/// Scores every pair with `cfg`, on up to `jobs` threads. Output order follows input order.
ScenarioRun score_run(Scenario scenario, std::span<const DocumentPair> pairs, const EcdConfig& cfg,
                      unsigned jobs = 1);

struct ShiftSamples {
    std::vector<double> green;  // mean_common + ME, >= 0
    std::vector<double> blue;   // -(mean_common + AE), <= 0
};

/// Throws InputError on an empty run.
ShiftSamples shift_values(const ScenarioRun& run);

/// Silverman's rule: 0.9 · min(std, IQR/1.34) · n^(-1/5), falling back to the
/// sample std when the IQR is zero. Throws DegenerateError when the spread is zero.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel density of `samples` at each grid point.
std::vector<double> kde_evaluate(std::span<const double> samples, double bandwidth, std::span<const double> grid);

std::vector<double> linear_grid(double lo, double hi, std::size_t size);

struct KdeCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    double peak = 0.0;  // grid value at the density argmax
};

inline constexpr std::size_t kDefaultGridSize = 512;

/// Gaussian KDE on an even grid over [min - 3h, max + 3h]. Without an explicit
/// bandwidth, needs >= 2 samples with nonzero spread (DegenerateError otherwise).
KdeCurve kde(std::span<const double> samples, std::size_t grid_size = kDefaultGridSize,
             std::optional<double> bandwidth = std::nullopt);

/// Index of the first maximum.
std::size_t argmax(std::span<const double> values);

/// Trapezoid-rule integral of values over grid.
double trapezoid(std::span<const double> grid, std::span<const double> values);

/// Green (missing-side) and blue (added-side) densities on one shared grid.
struct DensityProfile {
    std::vector<double> grid;
    std::vector<double> green_density;
    std::vector<double> blue_density;
    double green_peak = 0.0;
    double blue_peak = 0.0;
    double green_bandwidth = 0.0;
    double blue_bandwidth = 0.0;
    std::size_t n_pairs = 0;
};

struct ProfileOptions {
    std::size_t grid_size = kDefaultGridSize;
    std::optional<double> bandwidth;  // overrides Silverman for both curves
};

/// The shared grid spans the union of both curves' [min - 3h, max + 3h].
DensityProfile profile(const ScenarioRun& run, const ProfileOptions& options = {});

struct OrderingReport {
    std::vector<double> per_variant_totals;
    double dispersion = 0.0;  // population std of the totals
    double range = 0.0;       // max - min
};

/// Scores each context variant against its aligned generation.
/// Throws InputError when the lists differ in length or are empty.
OrderingReport ordering_robustness(std::span<const AnnotatedDocument> context_variants,
                                   std::span<const AnnotatedDocument> generated, const EcdConfig& cfg);

}  // namespace ecd
