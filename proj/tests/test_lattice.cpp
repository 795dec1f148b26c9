#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smot/lattice.hpp"

using namespace smot;

namespace {

Marginal two_point() { return Marginal(Grid({50.0, 150.0}), {0.5, 0.5}); }

}  // namespace

TEST_CASE("lattice construction") {
    SUBCASE("no proxies") {
        auto lat = build_lattice(100.0, {two_point()}, {0, 10.0});
        CHECK(lat.periods == 1);
        CHECK(lat.level_count(0) == 2);
        CHECK(lat.path_count() == 2);
        CHECK(lat.mass_counts[0] == 2);
        CHECK_THROWS_AS(lat.top_proxy(), Error);
    }
    SUBCASE("two proxies at factor ten") {
        auto lat = build_lattice(100.0, {two_point()}, {2, 10.0});
        REQUIRE(lat.level_count(0) == 4);
        CHECK(lat.levels[0][0] == 50.0);
        CHECK(lat.levels[0][1] == 150.0);
        CHECK(lat.levels[0][2] == 1500.0);
        CHECK(lat.levels[0][3] == 15000.0);
        CHECK(lat.top_proxy() == 15000.0);
        CHECK(lat.is_proxy(0, 2));
        CHECK_FALSE(lat.is_proxy(0, 1));
    }
    SUBCASE("path count is the level product") {
        std::vector<double> pts;
        std::vector<double> w;
        for (int i = 0; i < 10; ++i) {
            pts.push_back(10.0 + i);
            w.push_back(0.1);
        }
        Marginal m(Grid(pts), w);
        auto lat = build_lattice(100.0, {m, m}, {0, 10.0});
        CHECK(lat.path_count() == 100);
    }
    SUBCASE("path cap is enforced") {
        std::vector<double> pts;
        std::vector<double> w;
        for (int i = 0; i < 20; ++i) {
            pts.push_back(10.0 + i);
            w.push_back(0.05);
        }
        Marginal m(Grid(pts), w);
        CHECK_THROWS_AS(build_lattice(100.0, {m, m, m}, {0, 10.0}, 1000), Error);
    }
    SUBCASE("zero-weight grid points are dropped from the mass levels") {
        Marginal m(Grid({0.0, 50.0, 150.0}), {0.0, 0.5, 0.5});
        auto lat = build_lattice(100.0, {m}, {0, 10.0});
        CHECK(lat.mass_counts[0] == 2);
        CHECK(lat.levels[0][0] == 50.0);
        double total = 0.0;
        for (double v : lat.mass_weights[0]) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("masks") {
    auto lat = build_lattice(100.0, {two_point(), two_point()}, {0, 10.0});
    SUBCASE("all paths") {
        auto mask = build_mask(lat, PredicateSpec::all_paths());
        CHECK(mask.feasible_count == 4);
        auto ranks = enumerate(lat, mask);
        CHECK(ranks == std::vector<std::int64_t>{0, 1, 2, 3});
    }
    SUBCASE("vacuous squared-variation bound keeps everything") {
        // Largest possible sum of squared increments: (100->150->50).
        double q = 50.0 * 50.0 + 100.0 * 100.0;
        auto mask = build_mask(lat, PredicateSpec::bounded_squared_variation(q));
        CHECK(mask.feasible_count == 4);
    }
    SUBCASE("tight increment bound empties the mask") {
        CHECK_THROWS_AS(build_mask(lat, PredicateSpec::max_abs_increment(0.0)), Error);
    }
    SUBCASE("drawdown bound bans dips") {
        auto mask = build_mask(lat, PredicateSpec::max_drawdown(10.0));
        // Only paths that never fall below the running maximum by more than 10:
        // (150,150) survives; anything visiting 50 does not.
        CHECK(mask.feasible_count == 1);
        auto ranks = enumerate(lat, mask);
        std::vector<int> idx;
        lat.decode(ranks[0], idx);
        CHECK(idx == std::vector<int>{1, 1});
    }
    SUBCASE("masked enumeration keeps lexicographic order") {
        auto mask = build_mask(lat, PredicateSpec::custom({2, 1}));
        auto ranks = enumerate(lat, mask);
        CHECK(ranks == std::vector<std::int64_t>{1, 2});
    }
    SUBCASE("mask construction is stable") {
        auto a = build_mask(lat, PredicateSpec::max_abs_increment(60.0));
        auto b = build_mask(lat, PredicateSpec::max_abs_increment(60.0));
        CHECK(a.feasible == b.feasible);
    }
}

TEST_CASE("rank and decode are inverse bijections") {
    Marginal m3(Grid({40.0, 90.0, 160.0}), {0.25, 0.5, 0.25});
    auto lat = build_lattice(100.0, {two_point(), m3}, {1, 10.0});
    std::vector<int> idx;
    for (std::int64_t r = 0; r < lat.path_count(); ++r) {
        lat.decode(r, idx);
        CHECK(lat.rank(idx) == r);
        for (int i = 0; i < lat.periods; ++i) {
            CHECK(idx[static_cast<size_t>(i)] >= 0);
            CHECK(idx[static_cast<size_t>(i)] < lat.level_count(i));
        }
    }
    CHECK(lat.history_count(0) == 1);
    CHECK(lat.history_count(1) == 3);
    CHECK(lat.history_count(2) == 12);
}

TEST_CASE("decoded values carry the fixed start") {
    auto lat = build_lattice(100.0, {two_point()}, {1, 10.0});
    std::vector<int> idx{2};
    std::vector<double> vals;
    lat.decode_values(idx, vals);
    CHECK(vals[0] == 100.0);
    CHECK(vals[1] == 1500.0);
}
