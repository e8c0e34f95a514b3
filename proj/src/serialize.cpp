#include "ecd/error.hpp"
#include "ecd/io.hpp"

namespace ecd {

json to_json(const SpectralStats& stats) {
    json j;
    j["weighted_alpha"] = stats.weighted_alpha;
    j["per_layer"] = json::array();
    for (const auto& l : stats.per_layer) {
        j["per_layer"].push_back({{"layer_id", l.layer_id},
                                  {"alpha", l.alpha},
                                  {"lambda_max", l.lambda_max},
                                  {"xmin", l.fit.xmin},
                                  {"n_tail", l.fit.n_tail},
                                  {"ks_statistic", l.fit.ks_statistic}});
    }
    j["skipped"] = json::array();
    for (const auto& s : stats.skipped) j["skipped"].push_back({{"layer_id", s.layer_id}, {"reason", s.reason}});
    return j;
}

SpectralStats spectral_stats_from_json(const json& j) {
    try {
        SpectralStats stats;
        stats.weighted_alpha = j.at("weighted_alpha").get<double>();
        for (const auto& l : j.at("per_layer")) {
            LayerStats ls;
            ls.layer_id = l.at("layer_id").get<std::string>();
            ls.alpha = l.at("alpha").get<double>();
            ls.lambda_max = l.at("lambda_max").get<double>();
            ls.fit.alpha = ls.alpha;
            ls.fit.xmin = l.value("xmin", 0.0);
            ls.fit.n_tail = l.value("n_tail", std::size_t{0});
            ls.fit.ks_statistic = l.value("ks_statistic", 0.0);
            stats.per_layer.push_back(std::move(ls));
        }
        if (j.contains("skipped")) {
            for (const auto& s : j.at("skipped")) {
                stats.skipped.push_back(SkippedLayer{s.at("layer_id").get<std::string>(), s.value("reason", "")});
            }
        }
        return stats;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed spectral stats: ") + e.what());
    }
}

json to_json(const DriftReport& r) {
    json j;
    j["per_layer"] = json::array();
    for (const auto& l : r.per_layer) j["per_layer"].push_back({{"layer_id", l.layer_id}, {"delta_alpha", l.delta_alpha}});
    j["weighted_alpha_before"] = r.weighted_alpha_before;
    j["weighted_alpha_after"] = r.weighted_alpha_after;
    j["delta_weighted_alpha"] = r.delta_weighted_alpha;
    j["relative_drift"] = r.relative_drift;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    return j;
}

json preference_record(const PromptCandidates& group, const PreferencePair& pair) {
    json j;
    j["prompt"] = group.prompt;
    j["context"] = group.context.doc.raw_text;
    j["chosen"] = group.candidates.at(pair.chosen).text.doc.raw_text;
    j["rejected"] = group.candidates.at(pair.rejected).text.doc.raw_text;
    j["ecd_chosen"] = pair.ecd_chosen;
    j["ecd_rejected"] = pair.ecd_rejected;
    return j;
}

}  // namespace ecd
