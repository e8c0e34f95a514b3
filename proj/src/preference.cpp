#include "ecd/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ecd/error.hpp"

namespace ecd {

namespace {

double overlap_fraction(const std::set<std::string>& mine, const std::set<std::string>& reference) {
    if (mine.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& x : mine) shared += reference.contains(x) ? 1 : 0;
    return static_cast<double>(shared) / static_cast<double>(mine.size());
}

std::set<std::string> word_set(const Document& doc) {
    std::set<std::string> words;
    for (const auto& t : doc.tokens) {
        if (is_word_token(t)) words.insert(t.normalized);
    }
    return words;
}

const PolicyGroup& group_of(const TrainingSet& set, const PairRef& pair) {
    if (pair.group >= set.groups.size()) throw InputError("pair references an unknown prompt");
    const auto& g = set.groups[pair.group];
    if (pair.chosen >= g.ids.size() || pair.rejected >= g.ids.size()) {
        throw InputError("candidate not in the policy's candidate set for prompt '" + g.prompt_id + "'");
    }
    return g;
}

void axpy(double a, std::span<const double> x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

void add_candidate(PromptCandidates& group, std::string id, AnnotatedDocument text, const EcdConfig& cfg) {
    Candidate c;
    c.id = std::move(id);
    c.prompt_id = group.prompt_id;
    c.ecd = ecd_score(group.context, text, cfg);
    c.text = std::move(text);
    group.candidates.push_back(std::move(c));
}

PairMiningResult build_pairs(std::span<const PromptCandidates> groups, double min_gap) {
    PairMiningResult out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& cands = groups[g].candidates;
        if (cands.size() < 2) {
            out.skipped.push_back(groups[g].prompt_id + ": fewer than 2 candidates");
            continue;
        }
        std::vector<std::size_t> order(cands.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cands[a].id < cands[b].id; });

        std::size_t chosen = order.front();
        std::size_t rejected = order.front();
        for (std::size_t i : order) {
            if (cands[i].ecd.total < cands[chosen].ecd.total) chosen = i;
            if (cands[i].ecd.total > cands[rejected].ecd.total) rejected = i;
        }
        const double gap = cands[rejected].ecd.total - cands[chosen].ecd.total;
        if (!(gap > 0.0) || gap < min_gap) {
            out.skipped.push_back(groups[g].prompt_id + ": ECD gap " + std::to_string(gap) + " below min_gap " +
                                  std::to_string(min_gap));
            continue;
        }
        out.pairs.push_back(PreferencePair{groups[g].prompt_id, g, chosen, rejected, cands[chosen].ecd.total,
                                           cands[rejected].ecd.total, gap});
    }
    return out;
}

std::vector<double> candidate_features(const AnnotatedDocument& context, const AnnotatedDocument& candidate) {
    return {overlap_fraction(candidate.entities.keys(), context.entities.keys()),
            overlap_fraction(word_set(candidate.doc), word_set(context.doc)), 1.0};
}

void TrainingSet::validate(std::size_t dimension) const {
    for (const auto& g : groups) {
        if (g.ids.size() != g.features.size() || g.ids.size() != g.ecd.size()) {
            throw InputError("prompt '" + g.prompt_id + "' has inconsistent candidate arrays");
        }
        for (const auto& f : g.features) {
            if (f.size() != dimension) throw InputError("feature dimension does not match the policy");
        }
    }
    for (const auto& p : pairs) group_of(*this, p);
}

TrainingSet make_training_set(std::span<const PromptCandidates> groups, const PairMiningResult& mined) {
    TrainingSet set;
    for (const auto& g : groups) {
        PolicyGroup pg;
        pg.prompt_id = g.prompt_id;
        for (const auto& c : g.candidates) {
            pg.ids.push_back(c.id);
            pg.features.push_back(candidate_features(g.context, c.text));
            pg.ecd.push_back(c.ecd.total);
        }
        set.groups.push_back(std::move(pg));
    }
    for (const auto& p : mined.pairs) set.pairs.push_back(PairRef{p.group, p.chosen, p.rejected, p.gap});
    return set;
}

double ToyPolicy::score(std::span<const double> features) const {
    if (features.size() != weights_.size()) throw InputError("feature dimension does not match the policy");
    double s = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) s += weights_[i] * features[i];
    return s;
}

std::vector<double> ToyPolicy::log_probabilities(const PolicyGroup& group) const {
    std::vector<double> s;
    s.reserve(group.features.size());
    for (const auto& f : group.features) s.push_back(score(f));
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - top);
    const double log_z = top + std::log(z);
    for (double& v : s) v -= log_z;
    return s;
}

std::vector<double> ToyPolicy::probabilities(const PolicyGroup& group) const {
    auto p = log_probabilities(group);
    for (double& v : p) v = std::exp(v);
    return p;
}

std::vector<double> ToyPolicy::grad_log_probability(const PolicyGroup& group, std::size_t candidate) const {
    const auto p = probabilities(group);
    std::vector<double> grad(group.features[candidate].begin(), group.features[candidate].end());
    for (std::size_t k = 0; k < p.size(); ++k) axpy(-p[k], group.features[k], grad);
    return grad;
}

std::size_t ToyPolicy::argmax(const PolicyGroup& group) const {
    std::size_t best = 0;
    double best_score = score(group.features[0]);
    for (std::size_t k = 1; k < group.features.size(); ++k) {
        const double s = score(group.features[k]);
        if (s > best_score || (s == best_score && group.ids[k] < group.ids[best])) {
            best = k;
            best_score = s;
        }
    }
    return best;
}

double dpo_ecd_objective(const ToyPolicy& policy, const TrainingSet& set, const PairRef& pair, double gamma) {
    const auto& g = group_of(set, pair);
    const auto log_p = policy.log_probabilities(g);
    const double ecd_gap = g.ecd[pair.rejected] - g.ecd[pair.chosen];
    return (log_p[pair.chosen] - log_p[pair.rejected]) + gamma * ecd_gap;
}

double dpo_ecd_loss(const ToyPolicy& policy, const TrainingSet& set, std::span<const PairRef> batch, double gamma) {
    if (batch.empty()) throw InputError("empty preference batch");
    double sum = 0.0;
    for (const auto& p : batch) sum += dpo_ecd_objective(policy, set, p, gamma);
    return -sum / static_cast<double>(batch.size());
}

std::vector<double> dpo_ecd_gradient(const ToyPolicy& policy, const TrainingSet& set, std::span<const PairRef> batch,
                                     double /*gamma*/) {
    if (batch.empty()) throw InputError("empty preference batch");
    std::vector<double> grad(policy.weights().size(), 0.0);
    const double scale = -1.0 / static_cast<double>(batch.size());
    for (const auto& p : batch) {
        const auto& g = group_of(set, p);
        axpy(scale, policy.grad_log_probability(g, p.chosen), grad);
        axpy(-scale, policy.grad_log_probability(g, p.rejected), grad);
    }
    return grad;
}

double mean_argmax_ecd(const ToyPolicy& policy, const TrainingSet& set) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : set.groups) {
        if (g.ids.empty()) continue;
        sum += g.ecd[policy.argmax(g)];
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void TrainConfig::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be finite and >= 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InputError("learning rate must be >= 0");
    if (epochs < 1) throw InputError("epochs must be >= 1");
}

TrainResult train_toy(ToyPolicy policy, const TrainingSet& set, const TrainConfig& cfg) {
    cfg.validate();
    if (set.pairs.empty()) throw InputError("training needs at least one preference pair");
    set.validate(policy.weights().size());

    TrainResult result;
    auto record = [&](int epoch) {
        const double loss = dpo_ecd_loss(policy, set, set.pairs, cfg.gamma);
        if (!std::isfinite(loss)) {
            throw DomainError("non-finite loss at epoch " + std::to_string(epoch) + "; lower the learning rate");
        }
        result.metrics.push_back(EpochMetrics{epoch, loss, mean_argmax_ecd(policy, set)});
    };
    record(0);

    std::mt19937_64 rng(cfg.seed);
    std::vector<PairRef> order = set.pairs;
    const std::size_t batch = cfg.batch_size == 0 ? order.size() : std::min(cfg.batch_size, order.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (batch < order.size()) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::span<const PairRef> slice(order.data() + start, std::min(batch, order.size() - start));
            const auto grad = dpo_ecd_gradient(policy, set, slice, cfg.gamma);
            axpy(-cfg.learning_rate, grad, policy.weights());
        }
        record(epoch);
    }
    result.policy = std::move(policy);
    return result;
}

}  // namespace ecd
