#pragma once

#include <map>
#include <set>
#include <string>

#include "ecd/text.hpp"

namespace ecd {

enum class SigmaMode { kComputed, kFixed };

/// What to do when the two texts share no entity (the score divides by n_common).
enum class ZeroCommonPolicy {
    kError,     // throw DomainError("no common entities")
    kSentinel,  // mean_common = 1, penalties divided by 1
};

struct EcdConfig {
    int window_half_size = kDefaultWindow;
    SigmaMode sigma_mode = SigmaMode::kComputed;
    double fixed_sigma = 0.0;
    ZeroCommonPolicy zero_common_policy = ZeroCommonPolicy::kError;

    /// Throws InputError when window_half_size < 1 or fixed_sigma < 0.
    void validate() const;
};

struct EntityPartition {
    std::set<std::string> common;   // E_r ∩ E_g
    std::set<std::string> missing;  // E_r \ E_g
    std::set<std::string> added;    // E_g \ E_r
};

/// Full decomposition of one score. total == mean_common + me_penalty + ae_penalty.
struct EcdBreakdown {
    std::map<std::string, double> per_entity_divergence;
    double mean_common = 0.0;
    double sigma = 0.0;
    std::size_t n_common = 0;
    double me_penalty = 0.0;
    double ae_penalty = 0.0;
    double total = 0.0;
    EntityPartition partition;
};

EntityPartition partition_entities(const EntitySet& context, const EntitySet& generated);

/// 1 - |a ∩ b| / |a ∪ b|; two empty windows are identical and score 0.
double jaccard_divergence(const std::set<std::string>& a, const std::set<std::string>& b);
double jaccard_divergence(const ContextWindow& a, const ContextWindow& b);

struct CommonDivergence {
    double mean_common = 0.0;
    std::map<std::string, double> per_entity;
    double sigma = 0.0;
};

/// Per-entity window divergence of the shared entities, their mean, and the
/// penalty scale σ (population std of the divergences, or the fixed value).
/// With no shared entity: throws under kError; under kSentinel returns
/// mean 1 and σ = fixed value (or 0 when computed).
CommonDivergence common_divergence(const AnnotatedDocument& context, const AnnotatedDocument& generated,
                                   const EntityPartition& partition, const EcdConfig& cfg);

/// Σ rank(e)·σ / n_common over missing entities, ranks taken from the context.
double missing_penalty(const EntityPartition& partition, const EntitySet& context, double sigma,
                       std::size_t n_common);

/// Σ rank(e)·σ / n_common over added entities, ranks taken from the generation.
double added_penalty(const EntityPartition& partition, const EntitySet& generated, double sigma,
                     std::size_t n_common);

EcdBreakdown ecd_score(const AnnotatedDocument& context, const AnnotatedDocument& generated,
                       const EcdConfig& cfg = {});

}  // namespace ecd
