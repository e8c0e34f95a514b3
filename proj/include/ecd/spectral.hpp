#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ecd {

/// A layer weight matrix. Stored so that rows >= cols; wider inputs are transposed.
struct LayerMatrix {
    std::string layer_id;
    Eigen::MatrixXd matrix;

    /// Throws InputError for min(rows, cols) < 2 and for non-finite entries.
    LayerMatrix(std::string id, Eigen::MatrixXd w);
};

/// Eigenvalues of WᵀW / N, descending.
struct LayerSpectrum {
    std::vector<double> eigenvalues;
    double lambda_max() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front(); }
};

LayerSpectrum esd(const LayerMatrix& layer);

struct PowerLawFit {
    double alpha = 0.0;
    double xmin = 0.0;
    std::size_t n_tail = 0;
    double ks_statistic = 0.0;
};

inline constexpr std::size_t kMinTail = 5;

/// α = 1 + n / Σ ln(λ / xmin) over the tail λ >= xmin.
/// Throws DegenerateError when the log sum is zero.
double power_law_alpha(std::span<const double> tail, double xmin);

/// Kolmogorov–Smirnov distance between the sorted tail and the fitted
/// power-law CDF 1 - (x / xmin)^(1 - α).
double power_law_ks(std::span<const double> sorted_tail, double xmin, double alpha);

/// Continuous MLE with xmin chosen among the distinct eigenvalues (leaving at
/// least kMinTail tail points) to minimize the KS distance; ties favour the
/// smaller xmin. Values <= λ_max · 1e-12 count as zero. Throws DegenerateError
/// with fewer than kMinTail positive values or when no candidate tail has spread.
PowerLawFit fit_power_law(const LayerSpectrum& spectrum);
PowerLawFit fit_power_law(std::span<const double> values);

struct LayerStats {
    std::string layer_id;
    double alpha = 0.0;
    double lambda_max = 0.0;
    PowerLawFit fit;
};

struct SkippedLayer {
    std::string layer_id;
    std::string reason;
};

/// α̂ = (1/L) Σ α_l · ln λ_max,l over the fitted layers.
struct SpectralStats {
    std::vector<LayerStats> per_layer;
    std::vector<SkippedLayer> skipped;
    double weighted_alpha = 0.0;
};

/// The α̂ reduction alone. Throws DegenerateError on an empty list.
double weighted_alpha_of(std::span<const LayerStats> layers);

/// Fits every layer; layers that cannot be fitted are reported as skipped.
/// Throws DegenerateError when no layer can be fitted.
SpectralStats weighted_alpha(std::span<const LayerMatrix> layers, unsigned jobs = 1);

struct LayerDrift {
    std::string layer_id;
    double delta_alpha = 0.0;
};

struct DriftReport {
    std::vector<LayerDrift> per_layer;
    double weighted_alpha_before = 0.0;
    double weighted_alpha_after = 0.0;
    double delta_weighted_alpha = 0.0;
    double relative_drift = 0.0;  // |Δα̂| / |α̂_before|
    double threshold = 0.1;
    bool pass = true;
};

inline constexpr double kDefaultDriftThreshold = 0.1;

/// Throws InputError when the two stats cover different layer ids.
DriftReport compare_stats(const SpectralStats& before, const SpectralStats& after,
                          double threshold = kDefaultDriftThreshold);

/// Manifest: {"layers": [{"id", "path", "rows", "cols", "dtype": "f32"|"f64"}]}.
/// Paths are relative to the manifest; ".csv" payloads are comma-separated
/// rows, anything else raw little-endian row-major binary.
std::vector<LayerMatrix> load_layer_manifest(const std::filesystem::path& manifest);

}  // namespace ecd
