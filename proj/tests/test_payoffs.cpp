#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smot/payoffs.hpp"

using namespace smot;

namespace {

Marginal two_point() { return Marginal(Grid({50.0, 150.0}), {0.5, 0.5}); }

Marginal around(double lo, double hi) { return Marginal(Grid({lo, hi}), {0.5, 0.5}); }

double eval_on(const Payoff& p, const PathLattice& lat, std::vector<int> idx) {
    std::vector<double> values;
    lat.decode_values(idx, values);
    return p(idx, values);
}

double eval_values(const Payoff& p, std::vector<int> idx, std::vector<double> values) {
    return p(idx, values);
}

}  // namespace

TEST_CASE("catalog payoff formulas") {
    CHECK(eval_values(make_payoff(PayoffSpec::asian(100.0)), {0, 0}, {100.0, 100.0, 100.0}) ==
          0.0);
    CHECK(eval_values(make_payoff(PayoffSpec::asian(0.0)), {0, 0}, {100.0, 50.0, 150.0}) ==
          doctest::Approx(100.0));
    CHECK(eval_values(make_payoff(PayoffSpec::lookback_knock_in(100.0, 80.0)), {0, 0},
                      {100.0, 70.0, 120.0}) == doctest::Approx(20.0));
    CHECK(eval_values(make_payoff(PayoffSpec::lookback_knock_in(100.0, 60.0)), {0, 0},
                      {100.0, 70.0, 120.0}) == 0.0);  // never knocked in
    CHECK(eval_values(make_payoff(PayoffSpec::forward()), {0}, {100.0, 140.0}) == 140.0);
    CHECK(eval_values(make_payoff(PayoffSpec::european_call(90.0)), {0}, {100.0, 140.0}) == 50.0);
    CHECK(eval_values(make_payoff(PayoffSpec::european_put(90.0)), {0}, {100.0, 40.0}) == 50.0);
    auto basket = make_payoff(PayoffSpec::basket(
        {{2.0, PayoffSpec::forward()}, {-1.0, PayoffSpec::european_put(100.0)}}));
    CHECK(eval_values(basket, {0}, {100.0, 40.0}) == doctest::Approx(80.0 - 60.0));
}

TEST_CASE("unknown specs are rejected") {
    CHECK_THROWS_AS(make_payoff(PayoffSpec::asian(-1.0)), Error);
    CHECK_THROWS_AS(make_payoff(PayoffSpec::basket({})), Error);
    CHECK_THROWS_AS(make_payoff(PayoffSpec::table({1.0, 2.0}, 1.0)), Error);  // no lattice
}

TEST_CASE("analytic slopes") {
    SUBCASE("asian") {
        auto lat = build_lattice(100.0, {two_point(), two_point()}, {1, 10.0});
        auto beta = analytic_beta(make_payoff(PayoffSpec::asian(100.0)), lat);
        CHECK(beta.at(0, 0) == doctest::Approx(1.0));
        for (std::int64_t h = 0; h < lat.history_count(1); ++h)
            CHECK(beta.at(1, h) == doctest::Approx(0.5));
        CHECK_FALSE(beta.approximate);
    }
    SUBCASE("lookback knock-in tracks the running minimum") {
        auto lat = build_lattice(100.0, {around(70.0, 130.0), two_point()}, {1, 10.0});
        auto beta =
            analytic_beta(make_payoff(PayoffSpec::lookback_knock_in(100.0, 80.0)), lat);
        // histories at period 1: s1 = 70 dips below the barrier, 130 does not.
        CHECK(beta.at(1, 0) == doctest::Approx(1.0));  // (2-1-1) + 1
        CHECK(beta.at(1, 1) == doctest::Approx(0.0));
        CHECK(beta.at(0, 0) == doctest::Approx(1.0));  // (2-1-0) + 0, barrier below spot
    }
    SUBCASE("forward and european flavors") {
        auto lat = build_lattice(100.0, {two_point()}, {1, 10.0});
        CHECK(analytic_beta(make_payoff(PayoffSpec::forward()), lat).at(0, 0) == 1.0);
        CHECK(analytic_beta(make_payoff(PayoffSpec::european_call(80.0)), lat).at(0, 0) == 1.0);
        CHECK(analytic_beta(make_payoff(PayoffSpec::european_put(80.0)), lat).at(0, 0) == 0.0);
    }
    SUBCASE("tables have no closed form") {
        auto lat = build_lattice(100.0, {two_point()}, {1, 10.0});
        std::vector<double> vals(static_cast<size_t>(lat.path_count()), 1.0);
        auto p = make_payoff(PayoffSpec::table(vals, 1.0), &lat);
        CHECK_THROWS_AS(analytic_beta(p, lat), Error);
    }
}

TEST_CASE("numeric slopes") {
    SUBCASE("asian converges to the analytic constant") {
        auto lat = build_lattice(100.0, {two_point(), two_point()}, {3, 10.0});
        auto mask = build_mask(lat, PredicateSpec::all_paths());
        auto beta = numeric_beta(make_payoff(PayoffSpec::asian(100.0)), lat, mask);
        CHECK(beta.approximate);
        CHECK(beta.at(0, 0) > 0.99);
        CHECK(beta.at(0, 0) < 1.01);
    }
    SUBCASE("error decreases as proxies grow") {
        double err_small = 0.0, err_large = 0.0;
        for (double factor : {100.0, 10000.0}) {
            auto lat = build_lattice(100.0, {two_point(), two_point()}, {2, factor});
            auto mask = build_mask(lat, PredicateSpec::all_paths());
            auto beta = numeric_beta(make_payoff(PayoffSpec::asian(100.0)), lat, mask);
            double err = std::abs(beta.at(0, 0) - 1.0);
            (factor == 100.0 ? err_small : err_large) = err;
        }
        CHECK(err_large <= err_small + 1e-12);
        CHECK(err_large <= 1e-6);
    }
    SUBCASE("bounded payoffs have zero slope") {
        auto lat = build_lattice(100.0, {two_point(), two_point()}, {2, 10.0});
        auto mask = build_mask(lat, PredicateSpec::all_paths());
        auto beta = numeric_beta(make_payoff(PayoffSpec::european_put(120.0)), lat, mask);
        for (int i = 0; i < 2; ++i)
            for (std::int64_t h = 0; h < lat.history_count(i); ++h)
                CHECK(beta.at(i, h) == doctest::Approx(0.0));
    }
    SUBCASE("lookback with an in-range barrier matches the analytic slopes") {
        auto lat = build_lattice(100.0, {around(70.0, 130.0), around(60.0, 140.0)}, {2, 10.0});
        auto mask = build_mask(lat, PredicateSpec::all_paths());
        auto payoff = make_payoff(PayoffSpec::lookback_knock_in(100.0, 80.0));
        auto num = numeric_beta(payoff, lat, mask);
        auto ana = analytic_beta(payoff, lat);
        for (int i = 0; i < 2; ++i)
            for (std::int64_t h = 0; h < lat.history_count(i); ++h)
                CHECK(num.at(i, h) == doctest::Approx(ana.at(i, h)).epsilon(1e-9));
    }
    SUBCASE("proxies are required") {
        auto lat = build_lattice(100.0, {two_point()}, {0, 10.0});
        auto mask = build_mask(lat, PredicateSpec::all_paths());
        CHECK_THROWS_AS(numeric_beta(make_payoff(PayoffSpec::forward()), lat, mask), Error);
    }
}

TEST_CASE("modified payoff") {
    auto lat = build_lattice(100.0, {two_point(), two_point()}, {2, 10.0});
    auto asian = make_payoff(PayoffSpec::asian(100.0));
    SUBCASE("asian reduction to the bounded form") {
        auto beta = analytic_beta(asian, lat);
        auto gb = modified_payoff_g_beta(asian, beta, lat);
        std::vector<int> idx;
        std::vector<double> values;
        double max_seen = -1e300;
        for (std::int64_t r = 0; r < lat.path_count(); ++r) {
            lat.decode(r, idx);
            lat.decode_values(idx, values);
            double avg = (values[1] + values[2]) / 2.0;
            double expect = std::max(avg - 100.0, 0.0) - avg + 100.0;
            CHECK(gb(idx, values) == doctest::Approx(expect).epsilon(1e-12));
            max_seen = std::max(max_seen, gb(idx, values));
        }
        CHECK(max_seen <= 100.0 + 1e-12);  // bounded above by the spot
    }
    SUBCASE("zero slopes leave the payoff unchanged") {
        BetaFunctions zero;
        zero.periods = 2;
        zero.values = {{0.0}, std::vector<double>(static_cast<size_t>(lat.history_count(1)), 0.0)};
        auto gb = modified_payoff_g_beta(asian, zero, lat);
        CHECK(eval_on(gb, lat, {1, 0}) == eval_on(asian, lat, {1, 0}));
    }
    SUBCASE("forward with unit slope pins the start") {
        auto lat1 = build_lattice(100.0, {two_point()}, {2, 10.0});
        auto fwd = make_payoff(PayoffSpec::forward());
        auto beta = analytic_beta(fwd, lat1);
        auto gb = modified_payoff_g_beta(fwd, beta, lat1);
        for (std::int64_t r = 0; r < lat1.path_count(); ++r) {
            std::vector<int> idx;
            lat1.decode(r, idx);
            CHECK(eval_on(gb, lat1, idx) == doctest::Approx(100.0).epsilon(1e-12));
        }
    }
    SUBCASE("lookback reduction is bounded above at the proxies") {
        auto lb = make_payoff(PayoffSpec::lookback_knock_in(100.0, 60.0));
        auto lat2 = build_lattice(100.0, {around(50.0, 150.0), around(50.0, 150.0)}, {2, 10.0});
        auto beta = analytic_beta(lb, lat2);
        auto gb = modified_payoff_g_beta(lb, beta, lat2);
        double mass_max = -1e300, proxy_max = -1e300;
        std::vector<int> idx;
        std::vector<double> values;
        for (std::int64_t r = 0; r < lat2.path_count(); ++r) {
            lat2.decode(r, idx);
            lat2.decode_values(idx, values);
            bool has_proxy = false;
            for (int i = 0; i < lat2.periods; ++i)
                if (lat2.is_proxy(i, idx[static_cast<size_t>(i)])) has_proxy = true;
            (has_proxy ? proxy_max : mass_max) = std::max(has_proxy ? proxy_max : mass_max,
                                                          gb(idx, values));
        }
        CHECK(proxy_max <= mass_max + 1e-9);
    }
}

TEST_CASE("penalized payoff") {
    auto lat = build_lattice(100.0, {around(100.0, 200.0), around(100.0, 200.0)}, {0, 10.0});
    auto fwd = make_payoff(PayoffSpec::forward());
    // Mask out every path except (100, 100).
    auto mask = build_mask(lat, PredicateSpec::custom({0}));

    SUBCASE("zero penalty changes nothing") {
        auto p = penalized_payoff(fwd, 0.0, mask, lat);
        for (std::int64_t r = 0; r < lat.path_count(); ++r) {
            std::vector<int> idx;
            lat.decode(r, idx);
            CHECK(eval_on(p, lat, idx) == eval_on(fwd, lat, idx));
        }
    }
    SUBCASE("on-mask values never move") {
        for (double n : {1.0, 10.0, 1000.0}) {
            auto p = penalized_payoff(fwd, n, mask, lat);
            CHECK(eval_on(p, lat, {0, 0}) == eval_on(fwd, lat, {0, 0}));
        }
    }
    SUBCASE("off-mask path (100, 200) at unit penalty loses 301") {
        auto p = penalized_payoff(fwd, 1.0, mask, lat);
        double base = eval_on(fwd, lat, {0, 1});
        CHECK(eval_on(p, lat, {0, 1}) == doctest::Approx(base - 301.0));
    }
    SUBCASE("pointwise nonincreasing in the penalty") {
        auto p1 = penalized_payoff(fwd, 1.0, mask, lat);
        auto p2 = penalized_payoff(fwd, 5.0, mask, lat);
        for (std::int64_t r = 0; r < lat.path_count(); ++r) {
            std::vector<int> idx;
            lat.decode(r, idx);
            CHECK(eval_on(p2, lat, idx) <= eval_on(p1, lat, idx) + 1e-15);
        }
    }
}

TEST_CASE("growth bounds") {
    auto lat = build_lattice(100.0, {two_point(), two_point()}, {3, 10.0});
    for (auto spec : {PayoffSpec::asian(100.0), PayoffSpec::forward(),
                      PayoffSpec::european_call(100.0), PayoffSpec::european_put(100.0),
                      PayoffSpec::lookback_knock_in(100.0, 80.0)}) {
        CHECK_NOTHROW(verify_growth_bound(make_payoff(spec), lat));
    }
    SUBCASE("table payoffs are rejected when the declared bound is too small") {
        std::vector<double> vals(static_cast<size_t>(lat.path_count()), 0.0);
        vals[0] = 1e6;  // path (50, 50): cap would be 1 + 100
        auto p = make_payoff(PayoffSpec::table(vals, 1.0), &lat);
        CHECK_THROWS_AS(verify_growth_bound(p, lat), Error);
    }
}
