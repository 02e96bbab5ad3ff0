#include <doctest.h>

#include <cstdlib>
#include <set>

#include "uasflow/error.hpp"
#include "uasflow/grid.hpp"

using namespace uasflow;

namespace {

DesignParams params(int L = 5, int Xe = 5, int Ye = 10) {
    DesignParams p;
    p.L = L;
    p.X_e = Xe;
    p.Y_e = Ye;
    return p;
}

Grid baseline() { return build_grid({0, 0}, {0, 110}, params(), {}); }

std::string code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_CASE("baseline grid layout") {
    Grid g = baseline();
    CHECK(g.zones().size() == 110);
    CHECK(g.node({0, 1}) == Cell{0, 5});
    CHECK(g.node({2, 3}) == Cell{22, 27});
    CHECK(g.streams() == 11);
}

TEST_CASE("minimal grid") {
    Grid g = build_grid({0, 0}, {0, 11}, params(5, 1, 1), {});
    CHECK(g.zones().size() == 3);
}

TEST_CASE("segment validation") {
    CHECK(code_of([] { build_grid({0, 0}, {0, 100}, params(), {}); }) == "segment-length-not-multiple-of-S");
    CHECK(code_of([] { build_grid({0, 0}, {5, 110}, params(), {}); }) == "segment-not-axis-aligned");
    CHECK(code_of([] { build_grid({0, 0}, {0, 121}, params(), {}); }) == "segment-levels-mismatch");
    DesignParams bad = params();
    bad.M = 1;
    CHECK(code_of([&] { bad.validate(); }) == "invalid-params");
}

TEST_CASE("rotated segment maps into the grid frame") {
    Grid g = build_grid({3, 4}, {3 + 110, 4}, params(), {});
    Cell w = g.frame().to_world(g.node({0, 1}));
    CHECK(w == Cell{8, 4});
    CHECK(g.frame().to_local(w) == g.node({0, 1}));
}

TEST_CASE("obstacle marks exactly the zones it touches") {
    Rect r{{-12, 36}, {-10, 38}};
    Grid g = build_grid({0, 0}, {0, 110}, params(), {r});
    // brute force: every cell of the rectangle mapped to its zone
    std::set<ZoneId> hit;
    for (int x = r.lo.x; x <= r.hi.x; ++x)
        for (int y = r.lo.y; y <= r.hi.y; ++y) {
            auto z = g.zone_of(g.frame().to_local({x, y}));
            REQUIRE(z);
            hit.insert(*z);
        }
    CHECK(hit == std::set<ZoneId>{{-1, 4}});
    for (const auto& z : g.zones()) CHECK(z.no_fly == (hit.count(z.id) == 1));
}

TEST_CASE("neighbors") {
    Grid g = baseline();
    Neighbors n = neighbors(g, {2, 3});
    CHECK(n.up == ZoneId{2, 4});
    CHECK(n.inward == ZoneId{1, 3});
    CHECK(n.inward_diag == ZoneId{1, 4});
    CHECK(n.outward == ZoneId{3, 3});

    Neighbors s0 = neighbors(g, {0, 1});
    CHECK(s0.up == ZoneId{0, 2});
    CHECK_FALSE(s0.inward);
    CHECK_FALSE(s0.inward_diag);

    CHECK_FALSE(neighbors(g, {-5, 4}).outward);
    CHECK_FALSE(neighbors(g, {5, 4}).outward);
    CHECK_FALSE(neighbors(g, {1, 10}).up);
}

TEST_CASE("path cells") {
    Grid g = baseline();
    auto alpha = path_cells(g, {1, 1}, {PathKind::Alpha});
    REQUIRE(alpha.size() == 11);
    for (const auto& c : alpha) CHECK(c.x == g.node({1, 1}).x);
    CHECK(alpha.back() == g.node({1, 2}));

    auto gamma = path_cells(g, {1, 1}, {PathKind::Gamma});
    REQUIRE(gamma.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(gamma[i] == Cell{g.node({1, 1}).x + i + 1, g.node({1, 1}).y});

    auto delta = path_cells(g, {1, 1}, {PathKind::DeltaHat});
    CHECK(delta.back() == g.node({0, 2}));

    CHECK(code_of([&] { path_cells(g, {0, 1}, {PathKind::DeltaHat}); }) == "kind-invalid-for-stream-zero");
    CHECK(code_of([&] { path_cells(g, {0, 1}, {PathKind::Gamma}); }) == "invalid-branch");
}

TEST_CASE("path cells mirror across stream zero") {
    Grid g = baseline();
    for (auto kind : {PathKind::Alpha, PathKind::Beta, PathKind::Gamma, PathKind::DeltaHat}) {
        auto a = path_cells(g, {3, 2}, {kind});
        auto b = path_cells(g, {-3, 2}, {kind});
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Cell{-b[i].x, b[i].y});
    }
    for (int i = 1; i <= 5; ++i) {
        auto a = path_cells(g, {2, 1}, {PathKind::BetaHat, i});
        auto b = path_cells(g, {-2, 1}, {PathKind::BetaHat, i});
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == Cell{-b[k].x, b[k].y});
    }
}

TEST_CASE("relative position along the lateral path") {
    Grid g = baseline();
    ZoneId z{1, 1};
    Cell n = g.node(z);
    CHECK(g.relative_position(z, n) == 6);
    CHECK(g.relative_position(z, {n.x - 5, n.y}) == 1);
    CHECK(g.relative_position(z, {n.x + 5, n.y}) == 11);
    CHECK(g.relative_position({-1, 1}, {-n.x + 5, n.y}) == 1);
    CHECK(code_of([&] { g.relative_position(z, {n.x, n.y + 1}); }) == "cell-not-on-lateral-path");

    // preference is injective along one path
    std::set<int> psis;
    for (int j = 1; j <= 11; ++j) psis.insert(preference(g.relative_position(z, g.lateral_cell(z, j)), 5));
    CHECK(psis.size() == 11);
}

TEST_CASE("preference") {
    CHECK(preference(1, 5) == 5);
    CHECK(preference(6, 5) == 0);
    CHECK(preference(11, 5) == -5);
    CHECK(code_of([] { preference(12, 5); }) == "j-out-of-range");
}

TEST_CASE("minimum cell edge") {
    CHECK(min_cell_edge(1.0) == doctest::Approx(4.4721).epsilon(1e-4));
    CHECK(min_cell_edge(0.5) == doctest::Approx(2.2361).epsilon(1e-4));
    CHECK(5.0 >= min_cell_edge(1.0));
}

TEST_CASE("zone lookup covers every cell exactly once") {
    Grid g = build_grid({0, 0}, {0, 10}, params(2, 2, 2), {});
    const int S = g.S(), L = g.L();
    for (int x = -(2 * S + L); x <= 2 * S + L; ++x)
        for (int y = 0; y < 2 * S; ++y) {
            auto z = g.zone_of({x, y});
            REQUIRE(z);
            CHECK(std::abs(g.node(*z).x - x) <= L);
            CHECK(y >= (z->level - 1) * S);
            CHECK(y < z->level * S);
        }
}
