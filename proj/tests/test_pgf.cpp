#include <doctest.h>

#include "uasflow/pgf.hpp"

using namespace uasflow;

TEST_CASE("shift division drops the constant term") {
    Pgf a = pgf_shift_div(Pgf{0.8, 0.2});
    REQUIRE(a.degree() == 0);
    CHECK(a[0] == doctest::Approx(0.2));

    Pgf b = pgf_shift_div(Pgf{0.6, 0.3, 0.1});
    REQUIRE(b.degree() == 1);
    CHECK(b[0] == doctest::Approx(0.3));
    CHECK(b[1] == doctest::Approx(0.1));
}

TEST_CASE("first queue term reduces to lambda times theta0") {
    const double lambda = 0.3, theta0 = 0.7;
    Pgf v1{1.0 - lambda * theta0, lambda * theta0};
    CHECK(pgf_shift_div(v1)[0] == doctest::Approx(lambda * theta0));
}

TEST_CASE("z * shift_div(v) + v(0) rebuilds v") {
    Pgf v{0.1, 0.2, 0.3, 0.4};
    Pgf z{0.0, 1.0};
    Pgf back = z * pgf_shift_div(v) + Pgf{v.at0()};
    for (std::size_t i = 0; i <= v.degree(); ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-15));
}

TEST_CASE("products and normalization") {
    Pgf a = Pgf::bernoulli(0.3) * Pgf::bernoulli(0.5);
    CHECK(a.at1() == doctest::Approx(1.0));
    CHECK(a.mean() == doctest::Approx(0.8));
    CHECK(a[0] == doctest::Approx(0.35));

    Pgf b = (Pgf{0.2, 0.2} * 1.0).normalized();
    CHECK(b[0] == doctest::Approx(0.5));
    CHECK(b.at1() == doctest::Approx(1.0));
}

TEST_CASE("clamp01") {
    CHECK(clamp01(-1e-17) == 0.0);
    CHECK(clamp01(1.0 + 1e-12) == 1.0);
    CHECK(clamp01(0.25) == 0.25);
}
