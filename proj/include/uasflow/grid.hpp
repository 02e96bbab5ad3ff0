#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace uasflow {

struct DesignParams {
    int L = 5;
    int M = 2;
    double eta = 0.5;
    int X_e = 5;
    int Y_e = 10;
    double delta_T = 1.0;  // seconds per slot, metadata only

    int S() const { return 2 * L + 1; }
    void validate() const;  // throws ConfigError
};

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

struct ZoneId {
    int stream = 0;
    int level = 1;
    auto operator<=>(const ZoneId&) const = default;
};

std::string to_string(const ZoneId& z);

struct Zone {
    ZoneId id;
    Cell node;  // grid frame
    bool no_fly = false;
};

// Inclusive cell rectangle in world coordinates.
struct Rect {
    Cell lo;
    Cell hi;
};

enum class PathKind { Alpha, Beta, Gamma, BetaHat, GammaHat, DeltaHat };

struct PathSpec {
    PathKind kind = PathKind::Alpha;
    int index = 0;   // i in [1, L] for BetaHat/GammaHat
    int branch = 0;  // +1 right / -1 left, Stream(0) Gamma and GammaHat only
};

// Rigid map between world cells and the grid frame (+y upstream, +x right).
struct Frame {
    Cell origin;     // world cell of the segment start
    Cell up{0, 1};   // world unit vector of grid +y
    Cell right{1, 0};

    Cell to_local(Cell w) const;
    Cell to_world(Cell g) const;
};

struct Neighbors {
    std::optional<ZoneId> up;
    std::optional<ZoneId> inward;
    std::optional<ZoneId> inward_diag;
    std::optional<ZoneId> outward;       // Stream(0): the +1 (right) neighbor
    std::optional<ZoneId> outward_left;  // Stream(0) only: the -1 neighbor
};

class Grid {
public:
    Grid(DesignParams params, Frame frame, Cell seg_start, Cell seg_end,
         std::vector<Zone> zones, std::optional<Rect> workspace);

    const DesignParams& params() const { return params_; }
    const Frame& frame() const { return frame_; }
    Cell segment_start() const { return seg_start_; }
    Cell segment_end() const { return seg_end_; }
    const std::optional<Rect>& workspace() const { return workspace_; }

    int L() const { return params_.L; }
    int S() const { return params_.S(); }
    int X_e() const { return params_.X_e; }
    int Y_e() const { return params_.Y_e; }
    int streams() const { return 2 * params_.X_e + 1; }

    const std::vector<Zone>& zones() const { return zones_; }
    bool contains(ZoneId z) const;
    // Levels 1..Y_e+1; level Y_e+1 is the delivery row beyond the grid.
    bool contains_extended(ZoneId z) const;
    const Zone& zone(ZoneId z) const;
    int index(ZoneId z) const;           // contains()
    int extended_index(ZoneId z) const;  // contains_extended()
    int extended_count() const { return streams() * (params_.Y_e + 1); }

    // Out-of-grid streams count as no-fly; the delivery row never does.
    bool no_fly(ZoneId z) const;

    Cell node(ZoneId z) const;
    int node_row(int level) const { return (level - 1) * S() + L(); }
    int delivery_row() const { return node_row(params_.Y_e + 1); }
    std::optional<ZoneId> zone_of(Cell c) const;  // extended levels

    // j in [1, S] along the lateral path; throws cell-not-on-lateral-path.
    int relative_position(ZoneId z, Cell c) const;
    // Cell at relative position j; branch selects the Stream(0) side.
    Cell lateral_cell(ZoneId z, int j, int branch = 0) const;
    bool on_lateral_row(Cell c) const;

private:
    DesignParams params_;
    Frame frame_;
    Cell seg_start_;
    Cell seg_end_;
    std::vector<Zone> zones_;
    std::optional<Rect> workspace_;
};

// Segment endpoints and rectangles are world cells.
Grid build_grid(Cell segment_start, Cell segment_end, const DesignParams& params,
                const std::vector<Rect>& no_fly_rects,
                std::optional<Rect> workspace = std::nullopt);

Neighbors neighbors(const Grid& grid, ZoneId z);

// Outward sign of a zone: sign(stream); 0 for Stream(0).
inline int outward_sign(ZoneId z) { return z.stream > 0 ? 1 : (z.stream < 0 ? -1 : 0); }

// Cells visited after each transition along the path (grid frame).
std::vector<Cell> path_cells(const Grid& grid, ZoneId z, PathSpec kind);

int preference(int j, int L);
double min_cell_edge(double safety_radius);

}  // namespace uasflow
