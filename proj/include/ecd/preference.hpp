#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecd/metric.hpp"
#include "ecd/text.hpp"

namespace ecd {

/// One generation for a prompt, scored against the prompt's retrieved context.
struct Candidate {
    std::string id;
    std::string prompt_id;
    AnnotatedDocument text;
    EcdBreakdown ecd;
};

struct PromptCandidates {
    std::string prompt_id;
    std::string prompt;
    AnnotatedDocument context;
    std::vector<Candidate> candidates;
};

/// Scores `text` against the group's context and appends it.
void add_candidate(PromptCandidates& group, std::string id, AnnotatedDocument text, const EcdConfig& cfg);

/// Chosen (lowest ECD) and rejected (highest ECD) generation of one prompt.
/// Indices point into the PromptCandidates span the pair was mined from.
struct PreferencePair {
    std::string prompt_id;
    std::size_t group = 0;
    std::size_t chosen = 0;
    std::size_t rejected = 0;
    double ecd_chosen = 0.0;
    double ecd_rejected = 0.0;
    double gap = 0.0;  // ecd_rejected - ecd_chosen
};

struct PairMiningResult {
    std::vector<PreferencePair> pairs;
    std::vector<std::string> skipped;  // one diagnostic per prompt without a pair
};

/// Per prompt: chosen = argmin ECD total, rejected = argmax; ties go to the
/// lexicographically smallest candidate id. A pair is emitted only when its
/// gap is strictly positive and >= min_gap; otherwise the prompt is skipped
/// with a diagnostic.
PairMiningResult build_pairs(std::span<const PromptCandidates> groups, double min_gap = 0.0);

/// Text features of a candidate relative to its context:
/// [entity overlap, word overlap, bias]. Overlaps are |A ∩ B| / |A| over the
/// candidate's entity keys and normalized word tokens (0 when A is empty).
std::vector<double> candidate_features(const AnnotatedDocument& context, const AnnotatedDocument& candidate);

inline constexpr std::size_t kToyFeatureCount = 3;

/// A prompt's enumerated candidate set as the toy policy sees it.
struct PolicyGroup {
    std::string prompt_id;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> features;
    std::vector<double> ecd;
};

/// Pair over a PolicyGroup. gap = ecd[rejected] - ecd[chosen].
struct PairRef {
    std::size_t group = 0;
    std::size_t chosen = 0;
    std::size_t rejected = 0;
    double gap = 0.0;
};

struct TrainingSet {
    std::vector<PolicyGroup> groups;
    std::vector<PairRef> pairs;

    /// Throws InputError when a pair references a candidate outside its group
    /// or feature dimensions disagree.
    void validate(std::size_t dimension) const;
};

TrainingSet make_training_set(std::span<const PromptCandidates> groups, const PairMiningResult& mined);

/// Linear-feature softmax over a candidate set: π(y|x) ∝ exp(w · f(x, y)).
class ToyPolicy {
public:
    ToyPolicy() : weights_(kToyFeatureCount, 0.0) {}
    explicit ToyPolicy(std::vector<double> weights) : weights_(std::move(weights)) {}

    const std::vector<double>& weights() const { return weights_; }
    std::vector<double>& weights() { return weights_; }

    double score(std::span<const double> features) const;
    std::vector<double> log_probabilities(const PolicyGroup& group) const;
    std::vector<double> probabilities(const PolicyGroup& group) const;
    /// ∇_w log π(candidate | x) = f(candidate) - Σ_k π_k f(k).
    std::vector<double> grad_log_probability(const PolicyGroup& group, std::size_t candidate) const;
    /// Highest-scoring candidate; ties go to the smallest id.
    std::size_t argmax(const PolicyGroup& group) const;

private:
    std::vector<double> weights_;
};

/// log π(y⁺|x) - log π(y⁻|x) + γ · (ECD(y⁻) - ECD(y⁺)).
double dpo_ecd_objective(const ToyPolicy& policy, const TrainingSet& set, const PairRef& pair, double gamma);

/// Negative batch mean of the objective. Throws InputError on an empty batch.
double dpo_ecd_loss(const ToyPolicy& policy, const TrainingSet& set, std::span<const PairRef> batch, double gamma);

/// Analytic gradient of dpo_ecd_loss. ECD scores are fixed per candidate
/// text, so the γ term contributes nothing.
std::vector<double> dpo_ecd_gradient(const ToyPolicy& policy, const TrainingSet& set, std::span<const PairRef> batch,
                                     double gamma);

/// Mean over prompts of the ECD total of the policy's argmax candidate.
double mean_argmax_ecd(const ToyPolicy& policy, const TrainingSet& set);

struct TrainConfig {
    double gamma = 1.0;
    double learning_rate = 0.1;
    int epochs = 20;
    std::uint64_t seed = 0;
    std::size_t batch_size = 0;  // 0 = full batch

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;  // 0 = before training
    double loss = 0.0;
    double mean_argmax_ecd = 0.0;
};

struct TrainResult {
    ToyPolicy policy;
    std::vector<EpochMetrics> metrics;  // epoch 0 .. epochs
};

/// Plain gradient descent on dpo_ecd_loss. Minibatches (when batch_size > 0)
/// are drawn from a per-epoch shuffle seeded by cfg.seed. Throws DomainError
/// when the loss becomes non-finite.
TrainResult train_toy(ToyPolicy policy, const TrainingSet& set, const TrainConfig& cfg);

}  // namespace ecd
