#include <doctest.h>

#include <cmath>

#include "uasflow/error.hpp"
#include "uasflow/sim.hpp"

using namespace uasflow;

namespace {

Scenario scenario(double lambda, int M, double eta, long uas = 1200) {
    DesignParams p;
    p.M = M;
    p.eta = eta;
    Scenario sc;
    sc.grid = build_grid({0, 0}, {0, 110}, p, {});
    sc.lambda = lambda;
    sc.max_uas = uas;
    return sc;
}

}  // namespace

TEST_CASE("arrival sampling") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) CHECK(sample_arrival(1.0, rng));
    for (int i = 0; i < 1000; ++i) CHECK_FALSE(sample_arrival(0.0, rng));
    long hits = 0;
    for (int i = 0; i < 100000; ++i) hits += sample_arrival(0.5, rng);
    CHECK(std::fabs(hits / 1e5 - 0.5) <= 0.02);
}

TEST_CASE("first slot deploys at the source node") {
    Scenario sc = scenario(1.0, 2, 0.5, 10);
    Simulator sim(sc);
    CHECK(sim.managed().empty());
    sim.step();
    REQUIRE(sim.managed().size() == 1);
    CHECK(sim.managed()[0].cell == sc.grid.node({0, 1}));
}

TEST_CASE("seeded runs replay exactly") {
    Scenario sc = scenario(0.6, 2, 0.5, 300);
    sc.log_events = true;
    sc.seed = 99;
    Metrics a = run(sc);
    Metrics b = run(sc);
    CHECK(a.events == b.events);
    CHECK(a.delivered == b.delivered);
    CHECK(a.delay_sum == b.delay_sum);
    sc.seed = 100;
    CHECK(run(sc).events != a.events);
}

TEST_CASE("every deployed UAS is delivered") {
    Scenario sc = scenario(0.8, 2, 0.5, 500);
    Metrics m = run(sc);
    CHECK(m.deployed == 500);
    CHECK(m.delivered == 500);
    CHECK(m.violations.total() == 0);
    CHECK(m.up_transitions + m.diag_transitions == 500L * 110);
}

TEST_CASE("light traffic stays on the nominal stream") {
    Metrics m = run(scenario(0.05, 2, 0.5));
    REQUIRE(!m.spread.empty());
    CHECK(m.spread[0].first == 1);
    CHECK(m.spread[0].second == std::pair<int, int>{0, 0});
}

TEST_CASE("heavy traffic spreads two streams each way") {
    Metrics m = run(scenario(0.8, 2, 0.5));
    CHECK(m.spread[0].second == std::pair<int, int>{-2, 2});
}

TEST_CASE("mirror symmetry of the spread") {
    Metrics m = run(scenario(0.8, 2, 0.5));
    const auto& z = m.zones;
    for (int X = 1; X <= 5; ++X) {
        double r = z.at({X, 1}).mean_managed_in_service();
        double l = z.at({-X, 1}).mean_managed_in_service();
        CHECK(std::fabs(r - l) <= 0.1);
    }
}

TEST_CASE("exogenous stream statistics") {
    Scenario sc = scenario(0.2, 4, 0.5, 0);
    sc.max_slots = 30000;
    sc.exo.enabled = true;
    sc.exo.lambda_e = 0.2;
    Metrics m = run(sc);
    const auto& zm = m.zones.at({0, 2});
    CHECK(std::fabs(zm.mean_exogenous() - 2.2) <= 0.1);
    double total = 0;
    for (long n : zm.exo_hist) total += double(n);
    CHECK(std::fabs(zm.exo_hist[0] / total - std::pow(0.8, 11)) <= 0.01);

    Scenario none = sc;
    none.exo.lambda_e = 0.0;
    none.max_slots = 3000;
    Metrics n0 = run(none);
    CHECK(n0.zones.at({0, 2}).mean_exogenous() == 0.0);
}

TEST_CASE("scenario validation") {
    Scenario sc = scenario(0.2, 2, 0.5);
    sc.lambda = -0.1;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.lambda = 0.2;
    sc.max_uas = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.max_uas = 10;
    sc.exo.enabled = true;
    sc.exo.row_offset = 5;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
}

TEST_CASE("drain cap") {
    Scenario sc = scenario(0.5, 2, 0.5, 50);
    sc.drain_cap = 10;
    try {
        run(sc);
        FAIL("expected the drain cap to trip");
    } catch (const Error& e) {
        CHECK(e.code() == "non-termination-cap-exceeded");
    }
}

TEST_CASE("scheduled threshold applies by level and slot") {
    Scenario sc = scenario(0.2, 2, 0.5);
    sc.m_schedule.push_back({3, 5, 100, 200, 6});
    CHECK(sc.M_at(4, 150) == 6);
    CHECK(sc.M_at(4, 250) == 2);
    CHECK(sc.M_at(2, 150) == 2);
}

TEST_CASE("no-fly zones are avoided") {
    DesignParams p;
    p.M = 2;
    Scenario sc;
    sc.grid = build_grid({0, 0}, {0, 110}, p, {{{20, 15}, {21, 16}}, {{-30, 40}, {-28, 41}}});
    sc.lambda = 0.8;
    sc.max_uas = 600;
    Metrics m = run(sc);
    CHECK(m.delivered == 600);
    CHECK(m.violations.no_fly_target == 0);
    CHECK(m.violations.total() == 0);
}
