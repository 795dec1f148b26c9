#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smot/runner.hpp"

using namespace smot;
using nlohmann::json;

namespace {

json base_call_config() {
    return json{
        {"spot", 100.0},
        {"maturities", 2},
        {"instrument_kind", "call"},
        {"marginals",
         json::array({{{"pmf", {{"levels", {80.0, 120.0}}, {"weights", {0.5, 0.5}}}}},
                      {{"pmf",
                        {{"levels", {60.0, 100.0, 140.0}}, {"weights", {0.25, 0.5, 0.25}}}}}})},
        {"payoff", {{"kind", "asian"}, {"strike", 100.0}}},
        {"proxies", {{"count", 2}, {"growth_factor", 10.0}}},
    };
}

json base_put_forward_config() {
    return json{
        {"spot", 100.0},
        {"maturities", 1},
        {"instrument_kind", "put"},
        {"marginals",
         json::array({{{"pmf", {{"levels", {40.0, 140.0}}, {"weights", {0.5, 0.5}}}}}})},
        {"payoff", {{"kind", "forward"}}},
        {"proxies", {{"count", 3}, {"growth_factor", 10.0}}},
    };
}

json strip_timings(json j) {
    j.erase("timings_ms");
    return j;
}

}  // namespace

TEST_CASE("valid call-market asian prices cleanly") {
    auto res = run_config(base_call_config());
    REQUIRE(res.exit_code == 0);
    double p = res.report["pricing"]["primal_value"].get<double>();
    double gap = res.report["pricing"]["gap"].get<double>();
    CHECK(std::abs(gap) <= 1e-7 * (1.0 + std::abs(p)));
    CHECK(res.report["conditions"]["pass"].get<bool>());
    CHECK(res.report["order"]["ok"].get<bool>());
}

TEST_CASE("put forward reports the bubble with routes") {
    auto cfg = base_put_forward_config();
    cfg["routes"] = {"direct", "beta", "gammaN"};
    cfg["gamma_schedule"] = {1.0, 10.0};
    auto res = run_config(cfg);
    REQUIRE(res.exit_code == 0);
    CHECK(res.report["pricing"]["gap"].get<double>() == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(res.report["pricing"]["gap_via_beta"].get<double>() ==
          doctest::Approx(10.0).epsilon(1e-6));
    CHECK(res.report["bubbles"][0].get<double>() == doctest::Approx(10.0));
    CHECK(res.report["pricing"]["gamma"].size() == 2);
}

TEST_CASE("maturity-monotonicity violation exits 2 with a certificate") {
    json cfg{
        {"spot", 100.0},
        {"maturities", 2},
        {"instrument_kind", "put"},
        {"marginals",
         json::array(
             {{{"put_curve",
                {{"strikes", {0.0, 60.0, 95.0, 120.0}}, {"prices", {0.0, 0.0, 0.0, 25.0}}}}},
              {{"put_curve",
                {{"strikes", {0.0, 60.0, 95.0, 120.0}}, {"prices", {0.0, 0.0, 0.0, 5.0}}}}}})},
        {"payoff", {{"kind", "forward"}}},
    };
    auto res = run_config(cfg);
    CHECK(res.exit_code == 2);
    REQUIRE(res.report.contains("certificate"));
    CHECK(res.report["certificate"]["cost"].get<double>() <= -1e-6);
    CHECK(res.report["certificate"]["worst_payoff"].get<double>() >= -1e-9);
}

TEST_CASE("empty prediction set exits 3") {
    auto cfg = base_call_config();
    cfg["prediction_set"] = {{"kind", "max_abs_increment"}, {"delta", 0.0}};
    auto res = run_config(cfg);
    CHECK(res.exit_code == 3);
}

TEST_CASE("config errors carry field context") {
    auto cfg = base_call_config();
    cfg.erase("payoff");
    auto res = run_config(cfg);
    CHECK(res.exit_code == 3);
    CHECK(res.report["error"].get<std::string>().find("payoff") != std::string::npos);
}

TEST_CASE("reports are deterministic apart from timings") {
    auto cfg = base_put_forward_config();
    cfg["routes"] = {"direct", "beta"};
    auto a = run_config(cfg);
    auto b = run_config(cfg);
    CHECK(strip_timings(a.report).dump() == strip_timings(b.report).dump());
}

TEST_CASE("lognormal marginals hit the configured mean exactly") {
    json cfg{
        {"spot", 100.0},
        {"maturities", 1},
        {"instrument_kind", "put"},
        {"marginals",
         json::array({{{"lognormal",
                        {{"mean", 92.0}, {"log_variance", 0.05}, {"grid_size", 9}}}}})},
        {"payoff", {{"kind", "forward"}}},
    };
    auto res = run_config(cfg);
    REQUIRE(res.exit_code == 0);
    CHECK(res.report["marginals"][0]["mean"].get<double>() ==
          doctest::Approx(92.0).epsilon(1e-12));
    CHECK(res.report["pricing"]["gap"].get<double>() == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("sweeps") {
    SUBCASE("proxy factor sweep has the gap flat at the exact bubble") {
        auto cfg = base_put_forward_config();
        auto sweep = sweep_config(cfg, "proxy_factor", {10.0, 100.0, 1000.0});
        REQUIRE(sweep.rows.size() == 3);
        for (const auto& row : sweep.rows) {
            CHECK(row.status == "optimal");
            CHECK(row.gap == doctest::Approx(10.0).epsilon(1e-6));
        }
        CHECK(sweep.gap_monotone_nondecreasing);
        auto csv = sweep.csv();
        CHECK(csv.rfind("axis,P,V,gap,status\n", 0) == 0);
        CHECK(csv.find("# gap_monotone_nondecreasing=true") != std::string::npos);
    }
    SUBCASE("bounded payoff sweep stays gap-free") {
        auto cfg = base_put_forward_config();
        cfg["payoff"] = {{"kind", "european_put"}, {"strike", 100.0}};
        auto sweep = sweep_config(cfg, "proxy_factor", {10.0, 100.0});
        for (const auto& row : sweep.rows) CHECK(std::abs(row.gap) <= 1e-6);
    }
    SUBCASE("N sweep emits converging gamma") {
        auto cfg = base_put_forward_config();
        cfg["prediction_set"] = {{"kind", "max_drawdown"}, {"d", 62.0}};
        auto sweep = sweep_config(cfg, "N", {1.0, 10.0, 100.0});
        REQUIRE(sweep.rows.size() == 3);
        for (const auto& row : sweep.rows) CHECK(row.status == "optimal");
        CHECK(std::abs(sweep.rows[2].gap - sweep.rows[1].gap) <=
              std::abs(sweep.rows[1].gap - sweep.rows[0].gap) + 1e-9);
    }
    SUBCASE("grid size sweep requires a parametric source") {
        auto cfg = base_put_forward_config();
        CHECK_THROWS_AS(sweep_config(cfg, "grid_size", {5.0, 9.0}), Error);
    }
}

TEST_CASE("random table payoffs are reproducible per seed") {
    auto cfg = base_call_config();
    cfg["payoff"] = {{"kind", "random_table"}, {"seed", 7}, {"clamp", {0.0, 50.0}}};
    auto a = run_config(cfg);
    auto b = run_config(cfg);
    REQUIRE(a.exit_code == 0);
    CHECK(a.report["pricing"]["primal_value"] == b.report["pricing"]["primal_value"]);
    double p = a.report["pricing"]["primal_value"].get<double>();
    double gap = a.report["pricing"]["gap"].get<double>();
    CHECK(std::abs(gap) <= 1e-7 * (1.0 + std::abs(p)));
}
