#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "uasflow/analytics.hpp"
#include "uasflow/config.hpp"
#include "uasflow/sim.hpp"

using namespace uasflow;

namespace {

void check_normalized(const Pgf& p) {
    CHECK(p.at1() == doctest::Approx(1.0).epsilon(1e-9));
    for (double c : p.coeffs()) CHECK(c >= 0.0);
}

void check_same(const std::vector<Pgf>& a, const std::vector<Pgf>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        std::size_t n = std::max(a[j].degree(), b[j].degree());
        for (std::size_t i = 0; i <= n; ++i) CHECK(std::fabs(a[j][i] - b[j][i]) <= tol);
    }
}

double binom_tail(double p, int n, int k) {
    double below = 0.0;
    for (int i = 0; i < k; ++i) below += std::tgamma(n + 1) / (std::tgamma(i + 1) * std::tgamma(n - i + 1)) *
                                         std::pow(p, i) * std::pow(1 - p, n - i);
    return 1.0 - below;
}

AnalyticScenario level_scenario(const Grid& g, double lambda) {
    AnalyticScenario a;
    a.grid = &g;
    a.lambda = lambda;
    return a;
}

Grid grid_with(int M, double eta) {
    DesignParams p;
    p.M = M;
    p.eta = eta;
    return build_grid({0, 0}, {0, 110}, p, {});
}

}  // namespace

TEST_CASE("stream zero queue recursion edge cases") {
    Pgf A = Pgf::bernoulli(0.3);
    auto idle = stream0_queue_recursion(A, 0.0, 5);
    REQUIRE(idle.size() == 5);
    for (const auto& v : idle) CHECK(v[0] == doctest::Approx(1.0));

    auto busy = stream0_queue_recursion(A, 1.0, 5);
    Pgf power = Pgf::unit();
    for (const auto& v : busy) {
        power = power * A;
        for (std::size_t i = 0; i <= power.degree(); ++i) CHECK(v[i] == doctest::Approx(power[i]));
    }

    auto v = stream0_queue_recursion(Pgf::bernoulli(0.5), 0.4, 5);
    CHECK(v[0][0] == doctest::Approx(0.8));
    CHECK(v[0][1] == doctest::Approx(0.2));
    for (const auto& q : v) check_normalized(q);
}

TEST_CASE("stream zero queue recursion against the age-based queue") {
    const int L = 5;
    auto v = stream0_queue_recursion(Pgf::bernoulli(0.5), 0.5, L);
    auto mc = oracle::lcfs_monte_carlo(0.5, 0.5, L, 200000, 3);
    for (int j = 0; j < L; ++j)
        for (std::size_t n = 0; n < mc[j].size(); ++n) CHECK(std::fabs(v[j][n] - mc[j][n]) <= 0.01);
}

TEST_CASE("stream zero availability") {
    auto [s1, p1] = availability0(Pgf{1.0}, Pgf{1.0}, Pgf{1.0});
    CHECK(s1 == 1.0);
    CHECK(p1 == 0.0);
    auto [s2, p2] = availability0(Pgf{0.0, 1.0}, Pgf{1.0}, Pgf{1.0});
    CHECK(s2 == 0.0);
    CHECK(p2 == 1.0);
    auto [s3, p3] = availability0(Pgf::bernoulli(0.5), Pgf::bernoulli(0.1), Pgf::bernoulli(0.2));
    CHECK(s3 == doctest::Approx(0.4));
    CHECK(p3 == doctest::Approx(0.64));
}

TEST_CASE("forward congestion") {
    CHECK(forward_congestion(1.0, 1.0, 11, 2) == 0.0);
    CHECK(forward_congestion(0.0, 1.0, 11, 2) == doctest::Approx(1.0));
    CHECK(forward_congestion(0.5, 1.0, 11, 2) == doctest::Approx(1 - std::pow(0.5, 10) - 10 * std::pow(0.5, 10)));
    CHECK(forward_congestion(0.5, 1.0, 11, 2) == doctest::Approx(0.98926).epsilon(1e-5));
    // exogenous traffic adds S Bernoulli terms
    CHECK(forward_congestion(0.8, 0.8, 11, 4, 11) == doctest::Approx(binom_tail(0.2, 21, 4)));
    CHECK(forward_congestion(0.8, 0.8, 11, 4, 0) == doctest::Approx(binom_tail(0.2, 10, 4)));
}

TEST_CASE("feedback") {
    CHECK(feedback0(0.5, 0.6) == doctest::Approx(0.7));
    CHECK(feedbackX(1.0, 0.3, 0.5) == 0.0);
    CHECK(feedbackX(0.0, 0.3, 0.5) == doctest::Approx(feedback0(0.3, 0.5)));
    CHECK(feedbackX(0.1, 0.5, 0.6) == doctest::Approx(0.63));
}

TEST_CASE("on-off modulation") {
    CHECK(mmrp_modulate(0.3, 0.5, 11, 2).theta00 == doctest::Approx(0.8));
    for (double pe : {0.0, 0.2, 0.9}) CHECK(mmrp_modulate(0.5, pe, 11, 2).theta00 == doctest::Approx(0.8));
    CHECK(mmrp_modulate(0.0, 0.0, 11, 2).theta0_star == 0.0);

    double t10 = mmrp_modulate(0.5, 0.5, 11, 2).theta10;
    CHECK(t10 == doctest::Approx(4.5 / 11.0));
    CHECK(std::fabs(t10 - oracle::theta10_monte_carlo(11, 0.5, 2, 400000, 5)) <= 0.01);
    for (int M : {3, 5}) {
        double mc = oracle::theta10_monte_carlo(11, 0.3, M, 400000, 6 + M);
        CHECK(std::fabs(mmrp_modulate(0.5, 0.3, 11, M).theta10 - mc) <= 0.01);
    }
}

TEST_CASE("Bernoulli modulation") {
    auto m = mmrp_modulate(0.4, 0.3, 11, 3);
    CHECK(mmbp_modulate(m, 0.0) == 1.0);
    MmrpResult idle{0.8, 0.0, 0.0, 1.0};
    CHECK(mmbp_modulate(idle, 1.0) == doctest::Approx(0.0));
    double expect = 1.0 - ((1 - m.theta10) * m.theta1_star + (1 - m.theta00) * m.theta0_star) * 0.6;
    CHECK(std::fabs(mmbp_modulate(m, 0.6) - expect) <= 1e-12);
}

TEST_CASE("correction factor") {
    CHECK(correction_factor(0.0, 2, 0.5, 11) == 0.0);
    CHECK(correction_factor(0.2, 2, 0.5, 11) == doctest::Approx(0.15 * 0.1 * std::exp(-0.011)));
    CHECK(correction_factor(0.2, 2, 0.5, 11) == doctest::Approx(0.014836).epsilon(1e-5));
}

TEST_CASE("stream zero overflow") {
    Pgf A = Pgf::bernoulli(0.4);
    std::vector<Pgf> flat(5, Pgf::bernoulli(0.3));
    auto o = overflow0(A, flat, 0.0, 0.7, 0.5, 2, 11);
    CHECK(o.phi == doctest::Approx(correction_factor(0.4, 2, 0.5, 11)));
    CHECK(o.A_I_right[1] + o.A_I_left[1] == doctest::Approx(o.phi));

    auto none = overflow0(Pgf{1.0}, stream0_queue_recursion(Pgf{1.0}, 0.5, 5), 0.5, 1.0, 0.5, 2, 11);
    CHECK(none.phi == 0.0);
}

TEST_CASE("conflict arrivals") {
    auto e = conflict_arrival_estimate(Pgf::bernoulli(0.5), Pgf{1.0}, 0.4, 5, 2, 11, 0.5);
    CHECK(e.C[0] == doctest::Approx(1.0));
    CHECK(e.omega == 0.0);
    auto f = conflict_arrival_estimate(Pgf{1.0}, Pgf::bernoulli(0.5), 0.4, 5, 2, 11, 0.5);
    CHECK(f.omega == 0.0);
}

TEST_CASE("beta recursion") {
    Pgf AI = Pgf::bernoulli(0.35);
    check_same(streamX_beta_recursion(AI, 0.4, 0.0, 5), stream0_queue_recursion(AI, 0.4, 4), 1e-12);
    for (const auto& v : streamX_beta_recursion(Pgf{1.0}, 0.4, 0.2, 5)) CHECK(v[0] == doctest::Approx(1.0));
    auto busy = streamX_beta_recursion(AI, 1.0, 0.2, 5);
    Pgf power = Pgf::unit();
    for (const auto& v : busy) {
        power = power * AI;
        for (std::size_t i = 0; i <= power.degree(); ++i) CHECK(v[i] == doctest::Approx(power[i]));
    }
}

TEST_CASE("gamma branch weights") {
    for (double om : {0.0, 0.13, 0.5, 1.0})
        for (double b0 : {0.0, 0.4, 1.0})
            for (double rho : {0.0, 0.77, 1.0}) {
                double s = 0;
                for (double w : gamma_branch_weights(om, b0, rho)) s += w;
                CHECK(std::fabs(s - 1.0) <= 1e-12);
            }
}

TEST_CASE("gamma recursion reductions") {
    Pgf A = Pgf::bernoulli(0.45);
    const double theta0 = 0.35;
    // no conflicts and no descents: the c-free branches collapse to the LCFS queue
    auto g = streamX_gamma_recursion(A, Pgf{1.0}, Pgf{1.0}, theta0, 0.0, theta0, 5);
    check_same(g, stream0_queue_recursion(A, theta0, 5), 1e-12);

    for (const auto& v : streamX_gamma_recursion(Pgf{1.0}, Pgf{1.0}, Pgf{1.0}, 0.3, 0.1, 0.5, 5))
        CHECK(v[0] == doctest::Approx(1.0));
}

TEST_CASE("gamma recursion against the six-branch sample path") {
    oracle::GammaParams p{0.3, 0.1, 0.1, 0.6, 0.5};
    auto g = streamX_gamma_recursion(Pgf::bernoulli(p.a), Pgf::bernoulli(p.c), Pgf::bernoulli(1 - p.b0), 0.5,
                                     p.omega, p.rho, 5);
    auto mc = oracle::gamma_monte_carlo(p, 5, 200000, 17);
    for (std::size_t n = 0; n < mc[4].size(); ++n) CHECK(std::fabs(g[4][n] - mc[4][n]) <= 0.02);
}

TEST_CASE("stream X availability") {
    Pgf one{1.0};
    CHECK(availabilityX(one, one, one, one, one, one, one).first == 1.0);
    auto [s, p] = availabilityX(Pgf{0.0, 1.0}, one, one, one, one, one, one);
    CHECK(s == 0.0);
    CHECK(p == 1.0);
}

TEST_CASE("stream X overflow") {
    Pgf one{1.0};
    std::vector<Pgf> empty(5, one);
    CHECK(overflowX(one, one, one, empty, 0.3, 0.9, one, 0.5, 2, 11).gamma_phi == 0.0);
    std::vector<Pgf> flat(5, Pgf::bernoulli(0.2));
    auto o = overflowX(Pgf::bernoulli(0.3), one, one, flat, 0.0, 0.9, Pgf::bernoulli(0.1), 0.5, 2, 11);
    CHECK(o.gamma_phi == doctest::Approx(correction_factor(0.1, 2, 0.5, 11)));
    CHECK(o.A_I_out[1] == doctest::Approx(o.gamma_phi));
}

TEST_CASE("departures and expected counts") {
    CHECK(departures(1.0)[0] == 1.0);
    CHECK(departures(0.0)[1] == 1.0);
    CHECK(departures(0.3)[0] == doctest::Approx(0.3));
    CHECK(departures(0.3)[1] == doctest::Approx(0.7));
    CHECK(expected_counts(Pgf{1.0}, {}).first == 0.0);
    CHECK(expected_counts(Pgf{0.5, 0.25, 0.25}, {}).first == doctest::Approx(0.75));
    CHECK(expected_counts(Pgf{1.0}, {Pgf{0.5, 0.5}, Pgf{0.0, 1.0}}).second == doctest::Approx(1.5));
}

TEST_CASE("zone solves") {
    ZoneInputs in;
    in.A = Pgf{1.0};
    in.E0 = Pgf{1.0};
    auto z = solve_stream0(in);
    CHECK(z.theta0 == 0.0);
    CHECK_FALSE(z.solve.flagged);

    in.A = Pgf{0.0, 1.0};
    in.exo_service = 0;
    auto sat = solve_stream0(in);
    CHECK(std::fabs(sat.theta0_star - 9.0 / 11.0) <= 1e-2);
    CHECK(sat.mean_in_service <= 2.0 + 1e-9);
    CHECK(sat.solve.residual <= 1e-8);
    check_normalized(sat.departures);
}

TEST_CASE("expected spread") {
    Grid g5 = grid_with(2, 0.5);
    auto r = expected_spread(level_scenario(g5, 0.8));
    CHECK_FALSE(r.flagged);
    CHECK(r.spread[0].x_min == -2);
    CHECK(r.spread[0].x_max == 2);

    auto light = expected_spread(level_scenario(g5, 0.05));
    CHECK(light.spread[0].x_min == 0);
    CHECK(light.spread[0].x_max == 0);

    auto zero = expected_spread(level_scenario(g5, 0.0));
    for (const auto& [id, z] : zero.zones) CHECK(z.theta0 == 0.0);

    for (const auto& [id, z] : r.zones) {
        CHECK(z.solve.residual <= 1e-8);
        check_normalized(z.departures);
    }
}

TEST_CASE("spread width grows with the arrival rate") {
    Grid g = grid_with(2, 0.5);
    int prev = 0;
    for (int i = 1; i <= 10; ++i) {
        auto r = expected_spread(level_scenario(g, 0.1 * i));
        int w = r.spread[0].x_max - r.spread[0].x_min;
        CHECK(w >= prev);
        prev = w;
    }
}

TEST_CASE("fixed point map stays inside the unit interval") {
    for (double lambda : {0.1, 0.5, 1.0})
        for (int M : {2, 5}) {
            ZoneInputs in;
            in.A = Pgf::bernoulli(lambda);
            in.A_I = Pgf::bernoulli(lambda / 3);
            in.B = Pgf::bernoulli(0.2);
            in.M = M;
            auto z0 = solve_stream0(in);
            auto zx = solve_streamX(in);
            CHECK(z0.solve.residual <= 1e-8);
            CHECK(zx.solve.residual <= 1e-8);
            CHECK(z0.theta0 >= 0.0);
            CHECK(z0.theta0 <= 1.0);
        }
}

TEST_CASE("moderate traffic agrees with simulation at the source zone") {
    Grid g = grid_with(2, 0.5);
    Scenario sc;
    sc.grid = g;
    sc.lambda = 0.5;
    auto sim = run(sc);
    auto r = expected_spread(level_scenario(sc.grid, 0.5));
    CHECK(std::fabs(sim.zones.at({0, 1}).busy_fraction() - r.zones.at({0, 1}).theta0_star) <= 0.05);
}

namespace {

struct Paired {
    Metrics sim;
    SpreadResult ana;
};

Paired paired(double lambda) {
    Scenario sc;
    sc.grid = grid_with(2, 0.5);
    sc.lambda = lambda;
    Paired p{run(sc), {}};
    p.ana = expected_spread(level_scenario(sc.grid, lambda));
    return p;
}

}  // namespace

TEST_CASE("source zone overflow agrees with simulation") {
    auto p = paired(0.8);
    CHECK(std::fabs(p.sim.zones.at({0, 1}).overflow_rate() - p.ana.zones.at({0, 1}).phi) <= 0.03);
}

TEST_CASE("node conflict probability agrees with simulated Rule 6 frequency") {
    auto p = paired(0.8);
    const auto& z = p.sim.zones.at({1, 1});
    CHECK(std::fabs(double(z.rule6) / double(z.slots) - p.ana.zones.at({1, 1}).omega) <= 0.02);
}

TEST_CASE("first outer zone overflow agrees with simulation") {
    auto p = paired(0.8);
    CHECK(std::fabs(p.sim.zones.at({1, 1}).overflow_rate() - p.ana.zones.at({1, 1}).phi) <= 0.03);
}

// Availability estimated as entries per idle slot. Known gap: the outer-zone model
// underestimates how often the zone is idle (see README).
TEST_CASE("first outer zone availability agrees with simulation" * doctest::may_fail()) {
    auto p = paired(0.6);
    const auto& z = p.sim.zones.at({1, 1});
    double idle = double(z.slots - z.busy_slots);
    CHECK(std::fabs(double(z.entries) / idle - p.ana.zones.at({1, 1}).pi) <= 0.05);
}
