#include "uasflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "uasflow/error.hpp"

namespace uasflow {

void DesignParams::validate() const {
    if (L < 1) throw ConfigError("invalid-params", "L must be >= 1");
    if (M < 2 || M > S()) throw ConfigError("invalid-params", "M must satisfy 2 <= M <= S");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("invalid-params", "eta must be in [0,1]");
    if (X_e < 1) throw ConfigError("invalid-params", "X_e must be >= 1");
    if (Y_e < 1) throw ConfigError("invalid-params", "Y_e must be >= 1");
    if (!(delta_T > 0.0)) throw ConfigError("invalid-params", "delta_T must be positive");
}

std::string to_string(const ZoneId& z) {
    return "(" + std::to_string(z.stream) + "," + std::to_string(z.level) + ")";
}

Cell Frame::to_world(Cell g) const {
    return {origin.x + up.x * g.y + right.x * g.x, origin.y + up.y * g.y + right.y * g.x};
}

Cell Frame::to_local(Cell w) const {
    int dx = w.x - origin.x, dy = w.y - origin.y;
    return {dx * right.x + dy * right.y, dx * up.x + dy * up.y};
}

Grid::Grid(DesignParams params, Frame frame, Cell seg_start, Cell seg_end,
           std::vector<Zone> zones, std::optional<Rect> workspace)
    : params_(params),
      frame_(frame),
      seg_start_(seg_start),
      seg_end_(seg_end),
      zones_(std::move(zones)),
      workspace_(workspace) {}

bool Grid::contains(ZoneId z) const {
    return std::abs(z.stream) <= params_.X_e && z.level >= 1 && z.level <= params_.Y_e;
}

bool Grid::contains_extended(ZoneId z) const {
    return std::abs(z.stream) <= params_.X_e && z.level >= 1 && z.level <= params_.Y_e + 1;
}

int Grid::index(ZoneId z) const { return (z.level - 1) * streams() + z.stream + params_.X_e; }

int Grid::extended_index(ZoneId z) const { return index(z); }

const Zone& Grid::zone(ZoneId z) const {
    if (!contains(z)) throw Error("zone-not-in-grid", to_string(z));
    return zones_[index(z)];
}

bool Grid::no_fly(ZoneId z) const {
    if (std::abs(z.stream) > params_.X_e) return true;
    if (z.level == params_.Y_e + 1) return false;
    if (!contains(z)) return true;
    return zones_[index(z)].no_fly;
}

Cell Grid::node(ZoneId z) const { return {z.stream * S(), node_row(z.level)}; }

std::optional<ZoneId> Grid::zone_of(Cell c) const {
    if (c.y < 0) return std::nullopt;
    int s = S();
    int xs = c.x + L();
    int stream = (xs >= 0) ? xs / s : -((-xs + s - 1) / s);
    ZoneId z{stream, c.y / s + 1};
    if (!contains_extended(z)) return std::nullopt;
    return z;
}

bool Grid::on_lateral_row(Cell c) const {
    if (c.y < L()) return false;
    return (c.y - L()) % S() == 0;
}

int Grid::relative_position(ZoneId z, Cell c) const {
    Cell n = node(z);
    int d = c.x - n.x;
    if (c.y != n.y || std::abs(d) > L())
        throw Error("cell-not-on-lateral-path", to_string(z));
    int o = outward_sign(z);
    if (o == 0) return L() + 1 + std::abs(d);
    return L() + 1 + o * d;
}

Cell Grid::lateral_cell(ZoneId z, int j, int branch) const {
    Cell n = node(z);
    int o = outward_sign(z);
    if (o == 0) o = branch;
    return {n.x + o * (j - L() - 1), n.y};
}

Grid build_grid(Cell segment_start, Cell segment_end, const DesignParams& params,
                const std::vector<Rect>& no_fly_rects, std::optional<Rect> workspace) {
    params.validate();
    int dx = segment_end.x - segment_start.x, dy = segment_end.y - segment_start.y;
    if ((dx != 0 && dy != 0) || (dx == 0 && dy == 0))
        throw ConfigError("segment-not-axis-aligned", "nominal segment must be a non-empty axis-aligned line");
    int length = std::abs(dx) + std::abs(dy);
    const int S = params.S(), L = params.L;
    if (length % S != 0)
        throw ConfigError("segment-length-not-multiple-of-S",
                          "length " + std::to_string(length) + " vs S=" + std::to_string(S));
    if (length / S != params.Y_e)
        throw ConfigError("segment-levels-mismatch",
                          "segment spans " + std::to_string(length / S) + " levels but Y_e=" +
                              std::to_string(params.Y_e));

    Frame frame;
    frame.origin = segment_start;
    frame.up = {dx == 0 ? 0 : (dx > 0 ? 1 : -1), dy == 0 ? 0 : (dy > 0 ? 1 : -1)};
    frame.right = {frame.up.y, -frame.up.x};

    auto local_rect = [&](const Rect& r) {
        Cell a = frame.to_local(r.lo), b = frame.to_local(r.hi);
        return Rect{{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
    };
    auto overlaps = [](const Rect& a, const Rect& b) {
        return a.lo.x <= b.hi.x && b.lo.x <= a.hi.x && a.lo.y <= b.hi.y && b.lo.y <= a.hi.y;
    };
    auto inside = [](const Rect& inner, const Rect& outer) {
        return inner.lo.x >= outer.lo.x && inner.hi.x <= outer.hi.x && inner.lo.y >= outer.lo.y &&
               inner.hi.y <= outer.hi.y;
    };

    std::optional<Rect> ws_local;
    if (workspace) {
        ws_local = local_rect(*workspace);
        for (const auto& r : no_fly_rects)
            if (!inside(local_rect(r), *ws_local))
                throw ConfigError("no-fly-outside-workspace", "no-fly rectangle leaves the workspace");
    }

    std::vector<Zone> zones;
    zones.reserve(static_cast<std::size_t>((2 * params.X_e + 1) * params.Y_e));
    for (int Y = 1; Y <= params.Y_e; ++Y) {
        for (int X = -params.X_e; X <= params.X_e; ++X) {
            Rect block{{X * S - L, (Y - 1) * S}, {X * S + L, Y * S - 1}};
            Zone z{{X, Y}, {X * S, (Y - 1) * S + L}, false};
            if (ws_local && !inside(block, *ws_local)) {
                if (X == 0)
                    throw ConfigError("grid-exceeds-workspace",
                                      "nominal zone " + to_string(z.id) + " leaves the workspace");
                z.no_fly = true;
            }
            for (const auto& r : no_fly_rects)
                if (overlaps(block, local_rect(r))) z.no_fly = true;
            zones.push_back(z);
        }
    }
    return Grid(params, frame, segment_start, segment_end, std::move(zones), workspace);
}

Neighbors neighbors(const Grid& grid, ZoneId z) {
    Neighbors n;
    auto opt = [&](ZoneId q) -> std::optional<ZoneId> {
        if (grid.contains(q)) return q;
        return std::nullopt;
    };
    n.up = opt({z.stream, z.level + 1});
    int o = outward_sign(z);
    if (o == 0) {
        n.outward = opt({1, z.level});
        n.outward_left = opt({-1, z.level});
        return n;
    }
    n.inward = opt({z.stream - o, z.level});
    n.inward_diag = opt({z.stream - o, z.level + 1});
    n.outward = opt({z.stream + o, z.level});
    return n;
}

std::vector<Cell> path_cells(const Grid& grid, ZoneId z, PathSpec spec) {
    const int L = grid.L(), S = grid.S();
    int o = outward_sign(z);
    Cell n = grid.node(z);
    std::vector<Cell> out;
    auto need_branch = [&]() {
        if (o != 0) return o;
        if (spec.branch != 1 && spec.branch != -1)
            throw Error("invalid-branch", "Stream(0) lateral paths need branch +1 or -1");
        return spec.branch;
    };
    auto check_index = [&]() {
        if (spec.index < 1 || spec.index > L) throw Error("invalid-path-index", std::to_string(spec.index));
    };

    switch (spec.kind) {
        case PathKind::Alpha:
            for (int t = 1; t <= S; ++t) out.push_back({n.x, n.y + t});
            break;
        case PathKind::DeltaHat:
            if (o == 0) throw Error("kind-invalid-for-stream-zero", "DeltaHat");
            for (int t = 1; t <= S; ++t) out.push_back({n.x - o * t, n.y + t});
            break;
        case PathKind::Beta:
            if (o == 0) throw Error("kind-invalid-for-stream-zero", "Beta");
            for (int j = 1; j <= L; ++j) out.push_back(grid.lateral_cell(z, j));
            break;
        case PathKind::Gamma: {
            int b = need_branch();
            for (int j = L + 2; j <= S; ++j) out.push_back(grid.lateral_cell(z, j, b));
            break;
        }
        case PathKind::BetaHat: {
            if (o == 0) throw Error("kind-invalid-for-stream-zero", "BetaHat");
            check_index();
            int psi = preference(spec.index, L);
            Cell c = grid.lateral_cell(z, spec.index);
            for (int t = 1; t <= psi; ++t) out.push_back({c.x + o * t, c.y + t});
            break;
        }
        case PathKind::GammaHat: {
            check_index();
            int b = need_branch();
            int j = L + 1 + spec.index;
            Cell c = grid.lateral_cell(z, j, b);
            for (int t = 1; t <= spec.index; ++t) out.push_back({c.x - b * t, c.y + t});
            break;
        }
    }
    return out;
}

int preference(int j, int L) {
    if (j < 1 || j > 2 * L + 1) throw Error("j-out-of-range", std::to_string(j));
    return L + 1 - j;
}

double min_cell_edge(double safety_radius) { return 2.0 * std::sqrt(5.0) * safety_radius; }

}  // namespace uasflow
