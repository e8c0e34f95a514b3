#include <doctest.h>

#include <cmath>
#include <random>

#include "brute_force.hpp"
#include "ecd/metric.hpp"

using namespace ecd;

namespace {

constexpr int kCases = 500;
constexpr double kTol = 1e-12;

}  // namespace

TEST_CASE("oracle windows match context_window") {
    std::mt19937_64 rng(17);
    for (int c = 0; c < kCases; ++c) {
        const auto d = testing::random_doc(rng, testing::random_entity_choice(rng, 5), 30, "d");
        for (const auto& e : d.adoc.entities.entities()) {
            for (int w : {1, 2, 3, 5, 10}) {
                CHECK(context_window(d.adoc, e.key, w).words == testing::oracle_window(d.items, e.key, w));
            }
        }
    }
}

TEST_CASE("oracle ranks match load_annotations") {
    std::mt19937_64 rng(19);
    for (int c = 0; c < kCases; ++c) {
        const auto d = testing::random_doc(rng, testing::random_entity_choice(rng, 5), 30, "d");
        const auto ranks = testing::first_occurrence_ranks(d.items);
        REQUIRE(ranks.size() == d.adoc.entities.size());
        for (const auto& [k, r] : ranks) CHECK(d.adoc.entities.find(k)->rank == r);
    }
}

TEST_CASE("ecd_score agrees with the exhaustive scorer") {
    std::mt19937_64 rng(23);
    int with_common = 0;
    for (int c = 0; c < kCases; ++c) {
        const auto shared = testing::random_entity_choice(rng, 5);
        const auto ctx = testing::random_doc(rng, shared, 30, "c");
        const auto gen = testing::random_doc(rng, rng() % 4 ? shared : testing::random_entity_choice(rng, 5), 30, "g");
        const int w = 1 + static_cast<int>(rng() % 6);
        const bool fixed = rng() % 2;
        const double sigma = fixed ? std::uniform_real_distribution<double>(0.0, 2.0)(rng) : -1.0;

        EcdConfig cfg;
        cfg.window_half_size = w;
        cfg.zero_common_policy = ZeroCommonPolicy::kSentinel;
        if (fixed) {
            cfg.sigma_mode = SigmaMode::kFixed;
            cfg.fixed_sigma = sigma;
        }
        const auto got = ecd_score(ctx.adoc, gen.adoc, cfg);
        const auto want = testing::oracle_score(ctx.items, gen.items, w, sigma);
        with_common += want.no_common ? 0 : 1;
        CHECK(std::abs(got.mean_common - want.mean_common) <= kTol);
        CHECK(std::abs(got.sigma - want.sigma) <= kTol);
        CHECK(std::abs(got.me_penalty - want.me) <= kTol);
        CHECK(std::abs(got.ae_penalty - want.ae) <= kTol);
        CHECK(std::abs(got.total - want.total) <= kTol);
    }
    // the generator must exercise the main path, not only the sentinel
    CHECK(with_common > kCases / 2);
}
