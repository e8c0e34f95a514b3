#pragma once

// Exhaustive reference scorer working directly on generator items. It shares
// no code with the library beyond case_fold.

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "random_docs.hpp"

namespace ecd::testing {

struct OracleScore {
    double mean_common = 0.0;
    double sigma = 0.0;
    double me = 0.0;
    double ae = 0.0;
    double total = 0.0;
    bool no_common = false;
};

struct Position {
    std::string word;  // case-folded
    int mention = -1;  // index of the entity item this word belongs to, or -1
    std::string key;
};

inline std::vector<Position> word_positions(const std::vector<Item>& items) {
    std::vector<Position> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].kind == Item::kPunct) continue;
        for (const auto& w : items[i].words) {
            out.push_back({case_fold(w), items[i].kind == Item::kEntity ? static_cast<int>(i) : -1, items[i].key});
        }
    }
    return out;
}

inline std::map<std::string, int> first_occurrence_ranks(const std::vector<Item>& items) {
    std::map<std::string, int> ranks;
    for (const auto& it : items) {
        if (it.kind == Item::kEntity && !ranks.count(it.key)) {
            const int next = static_cast<int>(ranks.size()) + 1;
            ranks[it.key] = next;
        }
    }
    return ranks;
}

/// Every position q whose word-distance to some mention of `key` lies in [1, w].
inline std::set<std::string> oracle_window(const std::vector<Item>& items, const std::string& key, int w) {
    const auto pos = word_positions(items);
    std::set<std::string> out;
    for (std::size_t q = 0; q < pos.size(); ++q) {
        if (pos[q].mention >= 0 && pos[q].key == key) continue;
        for (std::size_t p = 0; p < pos.size(); ++p) {
            if (pos[p].mention < 0 || pos[p].key != key) continue;
            // distance from q to the mention containing p, measured from its nearest edge
            std::size_t first = p, last = p;
            while (first > 0 && pos[first - 1].mention == pos[p].mention) --first;
            while (last + 1 < pos.size() && pos[last + 1].mention == pos[p].mention) ++last;
            const long d = q < first ? static_cast<long>(first - q) : static_cast<long>(q - last);
            if (d >= 1 && d <= w) out.insert(pos[q].word);
        }
    }
    return out;
}

inline double oracle_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> uni = a;
    uni.insert(b.begin(), b.end());
    if (uni.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni.size());
}

/// fixed_sigma < 0 selects the population std of the divergences.
/// With no common entity the sentinel rule applies: mean 1, divisor 1,
/// computed σ = 0.
inline OracleScore oracle_score(const std::vector<Item>& ctx, const std::vector<Item>& gen, int w,
                                double fixed_sigma) {
    const auto rc = first_occurrence_ranks(ctx);
    const auto rg = first_occurrence_ranks(gen);
    std::vector<double> divs;
    for (const auto& [k, r] : rc) {
        if (rg.count(k)) divs.push_back(oracle_jaccard(oracle_window(ctx, k, w), oracle_window(gen, k, w)));
    }
    OracleScore s;
    s.no_common = divs.empty();
    if (s.no_common) {
        s.mean_common = 1.0;
        s.sigma = fixed_sigma < 0 ? 0.0 : fixed_sigma;
    } else {
        double sum = 0.0;
        for (double d : divs) sum += d;
        s.mean_common = sum / static_cast<double>(divs.size());
        if (fixed_sigma < 0) {
            double var = 0.0;
            for (double d : divs) var += (d - s.mean_common) * (d - s.mean_common);
            s.sigma = std::sqrt(var / static_cast<double>(divs.size()));
        } else {
            s.sigma = fixed_sigma;
        }
    }
    const double n = s.no_common ? 1.0 : static_cast<double>(divs.size());
    for (const auto& [k, r] : rc) {
        if (!rg.count(k)) s.me += r * s.sigma / n;
    }
    for (const auto& [k, r] : rg) {
        if (!rc.count(k)) s.ae += r * s.sigma / n;
    }
    s.total = s.mean_common + s.me + s.ae;
    return s;
}

}  // namespace ecd::testing
