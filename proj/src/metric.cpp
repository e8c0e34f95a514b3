#include "ecd/metric.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>

#include "ecd/error.hpp"

namespace ecd {

namespace {

double rank_sum(const std::set<std::string>& keys, const EntitySet& source, const char* side) {
    double sum = 0.0;
    for (const auto& key : keys) {
        const Entity* e = source.find(key);
        if (e == nullptr) {
            throw std::logic_error(std::string(side) + " entity '" + key + "' has no rank in its source set");
        }
        sum += e->rank;
    }
    return sum;
}

double penalty(const std::set<std::string>& keys, const EntitySet& source, double sigma, std::size_t n_common,
               const char* side) {
    if (n_common == 0) throw std::logic_error("penalty divisor n_common must be >= 1");
    if (keys.empty()) return 0.0;
    return rank_sum(keys, source, side) * sigma / static_cast<double>(n_common);
}

}  // namespace

void EcdConfig::validate() const {
    if (window_half_size < 1) throw InputError("window half-size must be >= 1");
    if (!(fixed_sigma >= 0.0) || !std::isfinite(fixed_sigma)) throw InputError("fixed sigma must be finite and >= 0");
}

EntityPartition partition_entities(const EntitySet& context, const EntitySet& generated) {
    const auto r = context.keys();
    const auto g = generated.keys();
    EntityPartition p;
    std::set_intersection(r.begin(), r.end(), g.begin(), g.end(), std::inserter(p.common, p.common.end()));
    std::set_difference(r.begin(), r.end(), g.begin(), g.end(), std::inserter(p.missing, p.missing.end()));
    std::set_difference(g.begin(), g.end(), r.begin(), r.end(), std::inserter(p.added, p.added.end()));
    return p;
}

double jaccard_divergence(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t shared = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++shared;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - shared;
    return 1.0 - static_cast<double>(shared) / static_cast<double>(uni);
}

double jaccard_divergence(const ContextWindow& a, const ContextWindow& b) {
    return jaccard_divergence(a.words, b.words);
}

CommonDivergence common_divergence(const AnnotatedDocument& context, const AnnotatedDocument& generated,
                                   const EntityPartition& partition, const EcdConfig& cfg) {
    cfg.validate();
    CommonDivergence out;
    if (partition.common.empty()) {
        if (cfg.zero_common_policy == ZeroCommonPolicy::kError) throw DomainError("no common entities");
        out.mean_common = 1.0;
        out.sigma = cfg.sigma_mode == SigmaMode::kFixed ? cfg.fixed_sigma : 0.0;
        return out;
    }

    double sum = 0.0;
    for (const auto& key : partition.common) {
        const double d = jaccard_divergence(context_window(context, key, cfg.window_half_size),
                                            context_window(generated, key, cfg.window_half_size));
        out.per_entity.emplace(key, d);
        sum += d;
    }
    const auto n = static_cast<double>(partition.common.size());
    out.mean_common = sum / n;

    if (cfg.sigma_mode == SigmaMode::kFixed) {
        out.sigma = cfg.fixed_sigma;
    } else {
        double ss = 0.0;
        for (const auto& [key, d] : out.per_entity) ss += (d - out.mean_common) * (d - out.mean_common);
        out.sigma = std::sqrt(ss / n);
    }
    return out;
}

double missing_penalty(const EntityPartition& partition, const EntitySet& context, double sigma,
                       std::size_t n_common) {
    return penalty(partition.missing, context, sigma, n_common, "missing");
}

double added_penalty(const EntityPartition& partition, const EntitySet& generated, double sigma,
                     std::size_t n_common) {
    return penalty(partition.added, generated, sigma, n_common, "added");
}

EcdBreakdown ecd_score(const AnnotatedDocument& context, const AnnotatedDocument& generated, const EcdConfig& cfg) {
    EcdBreakdown b;
    b.partition = partition_entities(context.entities, generated.entities);
    auto common = common_divergence(context, generated, b.partition, cfg);
    b.per_entity_divergence = std::move(common.per_entity);
    b.mean_common = common.mean_common;
    b.sigma = common.sigma;
    b.n_common = b.partition.common.size();

    const std::size_t divisor = std::max<std::size_t>(b.n_common, 1);
    b.me_penalty = missing_penalty(b.partition, context.entities, b.sigma, divisor);
    b.ae_penalty = added_penalty(b.partition, generated.entities, b.sigma, divisor);
    b.total = b.mean_common + b.me_penalty + b.ae_penalty;
    return b;
}

}  // namespace ecd
