#include "ecd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ecd/error.hpp"
#include "ecd/parallel.hpp"

namespace ecd {

LayerMatrix::LayerMatrix(std::string id, Eigen::MatrixXd w) : layer_id(std::move(id)) {
    if (std::min(w.rows(), w.cols()) < 2) throw InputError("layer '" + layer_id + "' needs at least a 2x2 matrix");
    if (!w.allFinite()) throw InputError("layer '" + layer_id + "' has non-finite entries");
    if (w.rows() < w.cols()) {
        matrix = w.transpose();
    } else {
        matrix = std::move(w);
    }
}

LayerSpectrum esd(const LayerMatrix& layer) {
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(layer.matrix);
    const auto& sv = svd.singularValues();
    const auto n = static_cast<double>(layer.matrix.rows());
    LayerSpectrum out;
    out.eigenvalues.reserve(static_cast<std::size_t>(sv.size()));
    for (Eigen::Index i = 0; i < sv.size(); ++i) out.eigenvalues.push_back(std::max(0.0, sv[i] * sv[i] / n));
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());
    return out;
}

double power_law_alpha(std::span<const double> tail, double xmin) {
    double log_sum = 0.0;
    for (double x : tail) log_sum += std::log(x / xmin);
    if (!(log_sum > 0.0)) throw DegenerateError("degenerate power-law tail: all values equal xmin");
    return 1.0 + static_cast<double>(tail.size()) / log_sum;
}

double power_law_ks(std::span<const double> sorted_tail, double xmin, double alpha) {
    const auto n = static_cast<double>(sorted_tail.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted_tail.size(); ++i) {
        const double model = 1.0 - std::pow(sorted_tail[i] / xmin, 1.0 - alpha);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - model), std::abs(static_cast<double>(i) / n - model)});
    }
    return d;
}

PowerLawFit fit_power_law(std::span<const double> values) {
    double top = 0.0;
    for (double v : values) top = std::max(top, v);
    std::vector<double> positive;
    for (double v : values) {
        if (v > top * 1e-12 && v > 0.0) positive.push_back(v);
    }
    if (positive.size() < kMinTail) {
        throw DegenerateError("power-law fit needs at least " + std::to_string(kMinTail) + " positive eigenvalues, got " +
                              std::to_string(positive.size()));
    }
    std::sort(positive.begin(), positive.end());

    std::optional<PowerLawFit> best;
    const std::size_t n = positive.size();
    for (std::size_t start = 0; start + kMinTail <= n; ++start) {
        if (start > 0 && positive[start] == positive[start - 1]) continue;  // distinct candidates only
        const double xmin = positive[start];
        const std::span<const double> tail(positive.data() + start, n - start);
        double log_sum = 0.0;
        for (double x : tail) log_sum += std::log(x / xmin);
        if (!(log_sum > 0.0)) continue;
        const double alpha = 1.0 + static_cast<double>(tail.size()) / log_sum;
        const double ks = power_law_ks(tail, xmin, alpha);
        if (!best || ks < best->ks_statistic) best = PowerLawFit{alpha, xmin, tail.size(), ks};
    }
    if (!best) throw DegenerateError("degenerate power-law tail: eigenvalues have no spread");
    return *best;
}

PowerLawFit fit_power_law(const LayerSpectrum& spectrum) { return fit_power_law(spectrum.eigenvalues); }

double weighted_alpha_of(std::span<const LayerStats> layers) {
    if (layers.empty()) throw DegenerateError("no fittable layers");
    double sum = 0.0;
    for (const auto& l : layers) sum += l.alpha * std::log(l.lambda_max);
    return sum / static_cast<double>(layers.size());
}

SpectralStats weighted_alpha(std::span<const LayerMatrix> layers, unsigned jobs) {
    struct Slot {
        std::optional<LayerStats> stats;
        std::string error;
    };
    std::vector<Slot> slots(layers.size());
    parallel_for(layers.size(), jobs, [&](std::size_t i) {
        try {
            const auto spectrum = esd(layers[i]);
            const auto fit = fit_power_law(spectrum);
            slots[i].stats = LayerStats{layers[i].layer_id, fit.alpha, spectrum.lambda_max(), fit};
        } catch (const DegenerateError& e) {
            slots[i].error = e.what();
        }
    });

    SpectralStats out;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].stats) {
            out.per_layer.push_back(*slots[i].stats);
        } else {
            out.skipped.push_back(SkippedLayer{layers[i].layer_id, slots[i].error});
        }
    }
    out.weighted_alpha = weighted_alpha_of(out.per_layer);
    return out;
}

DriftReport compare_stats(const SpectralStats& before, const SpectralStats& after, double threshold) {
    std::map<std::string, double> a_before, a_after;
    for (const auto& l : before.per_layer) a_before[l.layer_id] = l.alpha;
    for (const auto& l : after.per_layer) a_after[l.layer_id] = l.alpha;
    std::set<std::string> kb, ka;
    for (const auto& [k, v] : a_before) kb.insert(k);
    for (const auto& [k, v] : a_after) ka.insert(k);
    if (kb != ka) throw InputError("drift comparison needs the same layer ids before and after");

    DriftReport r;
    for (const auto& l : before.per_layer) r.per_layer.push_back(LayerDrift{l.layer_id, a_after[l.layer_id] - l.alpha});
    r.weighted_alpha_before = before.weighted_alpha;
    r.weighted_alpha_after = after.weighted_alpha;
    r.delta_weighted_alpha = after.weighted_alpha - before.weighted_alpha;
    r.threshold = threshold;
    if (r.delta_weighted_alpha == 0.0) {
        r.relative_drift = 0.0;
    } else if (before.weighted_alpha == 0.0) {
        r.relative_drift = std::numeric_limits<double>::infinity();
    } else {
        r.relative_drift = std::abs(r.delta_weighted_alpha) / std::abs(before.weighted_alpha);
    }
    r.pass = r.relative_drift <= threshold;
    return r;
}

namespace {

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path, long rows, long cols) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    Eigen::MatrixXd m(rows, cols);
    std::string line;
    long r = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (r >= rows) throw InputError(path.string() + ": more than " + std::to_string(rows) + " rows");
        std::stringstream ss(line);
        std::string cell;
        long c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= cols) throw InputError(path.string() + ": row " + std::to_string(r + 1) + " has too many columns");
            try {
                m(r, c++) = std::stod(cell);
            } catch (const std::exception&) {
                throw InputError(path.string() + ": bad number '" + cell + "'");
            }
        }
        if (c != cols) throw InputError(path.string() + ": row " + std::to_string(r + 1) + " has too few columns");
        ++r;
    }
    if (r != rows) throw InputError(path.string() + ": expected " + std::to_string(rows) + " rows");
    return m;
}

template <typename T>
Eigen::MatrixXd read_binary_matrix(const std::filesystem::path& path, long rows, long cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::vector<T> buf(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(T)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(T))) {
        throw InputError(path.string() + ": payload shorter than rows x cols");
    }
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) m(r, c) = static_cast<double>(buf[static_cast<std::size_t>(r * cols + c)]);
    }
    return m;
}

}  // namespace

std::vector<LayerMatrix> load_layer_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw InputError("cannot read " + manifest.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(manifest.string() + ": " + e.what());
    }
    std::vector<LayerMatrix> layers;
    try {
        for (const auto& entry : j.at("layers")) {
            const auto id = entry.at("id").get<std::string>();
            const auto rows = entry.at("rows").get<long>();
            const auto cols = entry.at("cols").get<long>();
            if (rows < 1 || cols < 1) throw InputError("layer '" + id + "' has invalid shape");
            const auto dtype = entry.value("dtype", std::string("f64"));
            const auto path = manifest.parent_path() / entry.at("path").get<std::string>();
            Eigen::MatrixXd m;
            if (path.extension() == ".csv") {
                m = read_csv_matrix(path, rows, cols);
            } else if (dtype == "f32") {
                m = read_binary_matrix<float>(path, rows, cols);
            } else if (dtype == "f64") {
                m = read_binary_matrix<double>(path, rows, cols);
            } else {
                throw InputError("layer '" + id + "' has unknown dtype '" + dtype + "'");
            }
            layers.emplace_back(id, std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(manifest.string() + ": " + e.what());
    }
    return layers;
}

}  // namespace ecd
