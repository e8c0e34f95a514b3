#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ecd/error.hpp"
#include "ecd/ragability.hpp"
#include "ecd/report.hpp"

using namespace ecd;

namespace {

ScenarioRun run_of(const std::vector<std::array<double, 3>>& rows) {
    ScenarioRun run;
    for (const auto& [mean, me, ae] : rows) {
        ScoredPair p;
        p.breakdown.mean_common = mean;
        p.breakdown.me_penalty = me;
        p.breakdown.ae_penalty = ae;
        p.breakdown.total = mean + me + ae;
        run.pairs.push_back(p);
    }
    return run;
}

std::vector<double> normal_samples(std::size_t n, std::uint64_t seed, double mu = 0.0, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(mu, sd);
    std::vector<double> out(n);
    for (auto& x : out) x = dist(rng);
    return out;
}

// Mostly exact self-pairs, a few pairs with a small common-entity divergence.
ScenarioRun near_self_run(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.05, 0.3);
    std::vector<std::array<double, 3>> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back({i % 10 == 0 ? jitter(rng) : 0.0, 0.0, 0.0});
    return run_of(rows);
}

}  // namespace

TEST_CASE("shift values") {
    const auto s = shift_values(run_of({{0.4, 0.6, 0.2}}));
    CHECK(s.green[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.blue[0] == doctest::Approx(-0.6).epsilon(1e-15));

    const auto zero = shift_values(run_of({{0, 0, 0}, {0, 0, 0}}));
    for (double g : zero.green) CHECK(g == 0.0);
    for (double b : zero.blue) {
        CHECK(b == 0.0);
        CHECK_FALSE(std::signbit(b));
    }
    CHECK_THROWS_AS(shift_values(ScenarioRun{}), InputError);
}

TEST_CASE("one more missing entity raises the green sample under fixed sigma") {
    EcdConfig cfg;
    cfg.sigma_mode = SigmaMode::kFixed;
    cfg.fixed_sigma = 0.5;
    const auto gen = annotate_heuristic("we saw Alpha there.");
    const auto three = annotate_heuristic("we saw Alpha there. then Beta and Gamma and Delta came.");
    const auto four = annotate_heuristic("we saw Alpha there. then Beta and Gamma and Delta and Eta came.");
    const std::vector<DocumentPair> p3{{&three, &gen}}, p4{{&four, &gen}};
    const auto s3 = shift_values(score_run(Scenario::kWebContext, p3, cfg));
    const auto s4 = shift_values(score_run(Scenario::kWebContext, p4, cfg));
    CHECK(s4.green[0] > s3.green[0]);
}

TEST_CASE("Silverman bandwidth") {
    const std::vector<double> xs{1, 2, 3, 4, 5};
    // std = sqrt(2.5), IQR = 2 -> IQR/1.34 < std
    CHECK(silverman_bandwidth(xs) == doctest::Approx(0.9 * (2.0 / 1.34) * std::pow(5.0, -0.2)).epsilon(1e-12));
    const std::vector<double> same{2, 2, 2};
    CHECK_THROWS_AS(silverman_bandwidth(same), DegenerateError);
    const std::vector<double> flat_iqr{0, 0, 0, 0, 0, 0, 0, 1};
    CHECK(silverman_bandwidth(flat_iqr) > 0.0);
}

TEST_CASE("kde of symmetric samples is symmetric") {
    const std::vector<double> xs{-3, -1, -0.5, 0.5, 1, 3};
    const auto c = kde(xs, 513);
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        CHECK(c.grid[i] == doctest::Approx(-c.grid[c.grid.size() - 1 - i]).epsilon(1e-12));
        CHECK(std::abs(c.density[i] - c.density[c.grid.size() - 1 - i]) <= 1e-9);
    }
}

TEST_CASE("kde of standard normal samples peaks near zero") {
    const auto xs = normal_samples(10000, 42);
    CHECK(std::abs(kde(xs).peak) <= 0.1);
}

TEST_CASE("two far samples with h = 1 give equal modes") {
    const std::vector<double> xs{0, 10};
    const auto c = kde(xs, 512, 1.0);
    const auto mid = c.density.size() / 2;
    const double left = *std::max_element(c.density.begin(), c.density.begin() + static_cast<long>(mid));
    const double right = *std::max_element(c.density.begin() + static_cast<long>(mid), c.density.end());
    CHECK(std::abs(left - right) <= 1e-9);
    CHECK(c.density[mid] < 0.01 * left);
}

TEST_CASE("kde degenerate sample") {
    const std::vector<double> same{1.5, 1.5, 1.5};
    CHECK_THROWS_WITH_AS(kde(same), doctest::Contains("degenerate sample"), DegenerateError);
    CHECK(kde(same, 512, 0.2).peak == doctest::Approx(1.5).epsilon(1e-3));
    const std::vector<double> one{0.0};
    CHECK_THROWS_AS(kde(one), DegenerateError);
}

TEST_CASE("kde integrates to one") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto xs = normal_samples(200, seed, 2.0, 0.7);
        const auto c = kde(xs);
        CHECK(std::abs(trapezoid(c.grid, c.density) - 1.0) <= 1e-3);
    }
}

TEST_CASE("shifting samples by c shifts the peak by c") {
    const auto xs = normal_samples(300, 9);
    const auto base = kde(xs);
    for (double c : {0.5, 1.0, 3.75, -2.0}) {
        auto shifted = xs;
        for (auto& x : shifted) x += c;
        const auto k = kde(shifted);
        const double step = k.grid[1] - k.grid[0];
        CHECK(std::abs((k.peak - base.peak) - c) <= step + 1e-12);
    }
}

TEST_CASE("profile of a near-self corpus is centred on zero") {
    const auto p = profile(near_self_run(200, 5));
    CHECK(std::abs(p.green_peak) <= p.green_bandwidth);
    CHECK(std::abs(p.blue_peak) <= p.blue_bandwidth);
    CHECK(std::abs(trapezoid(p.grid, p.green_density) - 1.0) <= 1e-3);
    CHECK(std::abs(trapezoid(p.grid, p.blue_density) - 1.0) <= 1e-3);
    CHECK(p.n_pairs == 200);
}

TEST_CASE("constant missing penalty shifts the green peak by that penalty") {
    const auto common = normal_samples(200, 77, 0.5, 0.1);
    const double me = 2.25;
    std::vector<std::array<double, 3>> rows;
    for (double m : common) rows.push_back({m, me, 0.0});
    const auto p = profile(run_of(rows));
    const auto base = kde(common);
    const double step = std::max(p.grid[1] - p.grid[0], base.grid[1] - base.grid[0]);
    CHECK(std::abs(p.green_peak - (base.peak + me)) <= step + 1e-12);
}

TEST_CASE("profile errors") {
    CHECK_THROWS_AS(profile(ScenarioRun{}), InputError);
    CHECK_THROWS_AS(profile(run_of({{0, 0, 0}, {0, 0, 0}})), DegenerateError);
    const auto p = profile(run_of({{0, 0, 0}, {0, 0, 0}}), ProfileOptions{512, 0.1});
    CHECK(p.green_peak == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("profile is deterministic") {
    const auto a = profile(near_self_run(100, 8));
    const auto b = profile(near_self_run(100, 8));
    CHECK(a.green_density == b.green_density);
    CHECK(a.blue_density == b.blue_density);
    CHECK(profile_csv(a) == profile_csv(b));
}

TEST_CASE("profile reports") {
    const auto p = profile(near_self_run(50, 3));
    const auto csv = profile_csv(p);
    CHECK(csv.rfind("grid,green,blue\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(p.grid.size()) + 1);
    const auto svg = profile_svg(p, "test");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    const auto j = peaks_json(p);
    CHECK(j.at("green_peak").get<double>() == p.green_peak);
    CHECK(j.at("blue_peak").get<double>() == p.blue_peak);
}

TEST_CASE("scenario tags round-trip") {
    for (auto s : {Scenario::kNoContext, Scenario::kPerfectContext, Scenario::kWebContext, Scenario::kSynthesizedContext}) {
        CHECK(parse_scenario(to_string(s)) == s);
    }
    CHECK_FALSE(parse_scenario("bogus").has_value());
}

TEST_CASE("parallel scoring keeps input order") {
    std::vector<AnnotatedDocument> docs;
    for (int i = 0; i < 40; ++i) {
        docs.push_back(annotate_heuristic("we met Alpha " + std::string(static_cast<std::size_t>(i % 7 + 1), 'x') +
                                          " today. then Beta left."));
    }
    std::vector<DocumentPair> pairs;
    for (int i = 0; i < 40; ++i) pairs.push_back({&docs[0], &docs[static_cast<std::size_t>(i)]});
    const auto serial = score_run(Scenario::kWebContext, pairs, EcdConfig{}, 1);
    const auto par = score_run(Scenario::kWebContext, pairs, EcdConfig{}, 8);
    REQUIRE(serial.pairs.size() == par.pairs.size());
    for (std::size_t i = 0; i < serial.pairs.size(); ++i) CHECK(serial.pairs[i].breakdown.total == par.pairs[i].breakdown.total);
}

TEST_CASE("ordering robustness") {
    EcdConfig cfg;
    cfg.window_half_size = 2;
    cfg.sigma_mode = SigmaMode::kFixed;
    cfg.fixed_sigma = 0.5;
    const std::vector<std::string> sentences{"we saw Alpha run fast.", "they met Beta at noon.",
                                             "you read Gamma out loud.", "she paid Delta in full."};
    const auto gen = annotate_heuristic("we saw Alpha run fast. they met Beta at noon. you read Gamma out loud.");
    const auto gen4 = annotate_heuristic("we saw Alpha walk slowly. they met Beta at noon. you read Gamma out loud. "
                                         "she paid Delta in full.");

    SUBCASE("sentence permutations leave every window unchanged") {
        std::vector<int> order{0, 1, 2, 3};
        std::vector<AnnotatedDocument> variants, gens;
        for (int v = 0; v < 10; ++v) {
            std::string text;
            for (int i : order) text += sentences[static_cast<std::size_t>(i)] + " ";
            variants.push_back(annotate_heuristic(text));
            gens.push_back(gen4);
            std::next_permutation(order.begin(), order.end());
        }
        const auto r = ordering_robustness(variants, gens, cfg);
        REQUIRE(r.per_variant_totals.size() == 10);
        for (double t : r.per_variant_totals) CHECK(t == r.per_variant_totals[0]);
        CHECK(r.dispersion == 0.0);
        CHECK(r.range == 0.0);
        CHECK(r.per_variant_totals[0] > 0.0);
    }
    SUBCASE("identical variants") {
        const std::vector<AnnotatedDocument> v(3, gen);
        CHECK(ordering_robustness(v, v, cfg).dispersion == 0.0);
    }
    SUBCASE("deleting entities from the context raises the total") {
        const std::vector<AnnotatedDocument> variants{
            annotate_heuristic(sentences[0] + " " + sentences[1] + " " + sentences[2]),
            annotate_heuristic(sentences[0] + " " + sentences[1]),
            annotate_heuristic(sentences[0])};
        const std::vector<AnnotatedDocument> gens(3, gen);
        const auto r = ordering_robustness(variants, gens, cfg);
        CHECK(r.per_variant_totals[0] < r.per_variant_totals[1]);
        CHECK(r.per_variant_totals[1] < r.per_variant_totals[2]);
    }
    SUBCASE("length mismatch") {
        const std::vector<AnnotatedDocument> one{gen}, two{gen, gen};
        CHECK_THROWS_AS(ordering_robustness(one, two, cfg), InputError);
        CHECK_THROWS_AS(ordering_robustness({}, {}, cfg), InputError);
    }
}
