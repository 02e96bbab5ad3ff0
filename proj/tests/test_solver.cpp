#include <doctest.h>

#include <cmath>

#include "uasflow/solver.hpp"

using namespace uasflow;

TEST_CASE("linear map") {
    auto r = solve_fixed_point([](double x) { return 0.5 * x + 0.2; });
    CHECK(r.root == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(r.residual <= 1e-8);
    CHECK_FALSE(r.flagged);
}

TEST_CASE("fixed point at an endpoint") {
    auto zero = solve_fixed_point([](double x) { return 0.3 * x; });
    CHECK(zero.root == doctest::Approx(0.0).epsilon(1e-9));
    auto one = solve_fixed_point([](double) { return 1.0; });
    CHECK(one.root == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(one.flagged);
}

TEST_CASE("several fixed points: smallest returned, all reported") {
    // x = h(x) at 0.2, 0.5 and 0.8
    auto h = [](double x) { return x + (x - 0.2) * (x - 0.5) * (x - 0.8); };
    auto r = solve_fixed_point(h);
    CHECK(r.root == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(r.brackets.size() >= 3);
}

TEST_CASE("steep continuous map") {
    auto r = solve_fixed_point([](double x) { return 1.0 - std::pow(x, 8); });
    CHECK(std::fabs(1.0 - std::pow(r.root, 8) - r.root) <= 1e-8);
    CHECK_FALSE(r.flagged);
}
