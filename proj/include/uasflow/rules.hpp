#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uasflow/grid.hpp"

namespace uasflow {

enum class Origin { Managed, Exogenous };

enum class Tag { Upstream, Outward, InwardDiag, OutwardDiag, EnterService, Descend, HoldExogenous };

const char* to_string(Tag t);

// Fixed S-transition service route: n_diag diagonal steps (x += dx each) then upstream.
struct Route {
    Cell start;
    int dx = 0;
    int n_diag = 0;
    int length = 11;
    ZoneId system;  // queueing system served (zone whose Z_UP is approached)
    PathKind kind = PathKind::Alpha;
    int index = 0;

    // Cell after t transitions; past the end the last heading continues.
    Cell at(int t) const;
    Cell end() const { return at(length); }
};

struct UasState {
    int id = 0;
    Cell cell;
    Origin origin = Origin::Managed;

    bool in_service = false;
    Route route;
    int step = 0;  // transitions made along route
    long entry_slot = 0;
    bool forced_entry = false;  // entered under Rule 6 irrespective of congestion

    bool arrived_up = false;  // reached its node this slot from a service route
    int exo_dir = 0;          // exogenous heading along x
};

struct Prediction {
    int uas_id = 0;
    Cell cell_at_k_plus_L;
};

struct CongestionView {
    bool up_congested = false;
    bool id_congested = false;
};

struct TransitionCommand {
    int uas_id = 0;
    Cell target;
    Tag tag = Tag::Upstream;
    std::optional<Route> route;      // set when entering service or descending
    std::optional<ZoneId> overflow;  // receiving zone when leaving a lateral path outward
};

// Lateral occupant of one zone's beta->gamma path.
struct Occupant {
    int id = 0;
    int j = 0;
    int branch = 0;  // Stream(0): side of the node (+1/-1), 0 at the node
    bool arrived_up = false;
};

std::vector<Prediction> predict_positions(const std::vector<UasState>& world, const Grid& grid, int L);

// Predicted-position count per extended zone index.
std::vector<int> prediction_counts(const std::vector<Prediction>& preds, const Grid& grid);

bool zone_congested(const std::vector<Prediction>& preds, const Grid& grid, ZoneId z, int M);

// World-level helpers used by descend_condition.
struct RuleContext {
    const Grid* grid = nullptr;
    std::vector<int> counts;                // prediction_counts
    std::vector<std::vector<Occupant>> lateral;  // occupants by zone index (levels 1..Y_e)
    std::function<int(int level)> M_at;     // threshold applied to a zone at that level
};

bool descend_condition(const RuleContext& ctx, ZoneId z);

struct Entrant {
    int uas_id = 0;
    int psi = 0;
    std::vector<Tag> moves;  // exactly S transitions
};

// Rule 3/4 winner for one lateral path; branch ties on Stream(0) go right when tie_draw < eta.
Entrant select_entrant(const std::vector<Occupant>& occupants, int L, double tie_draw = 0.0,
                       double eta = 0.5);

Route make_entry_route(const Grid& grid, ZoneId z, const Occupant& who);
Route make_descend_route(const Grid& grid, ZoneId z);

struct NodeConflictResolution {
    int beta_id = 0;
    int up_id = 0;
    std::vector<Tag> beta_moves;  // S upstream transitions along Alpha
    std::vector<Tag> up_moves;    // S inward-diagonal (DeltaHat) or one outward transition
};

// Rule 6 for a node holding one UAS from beta (arrived_up=false) and one from below.
NodeConflictResolution resolve_node_conflict(const std::vector<Occupant>& node_occupants, int S,
                                             bool descend_ok);

struct ZoneDecisionInput {
    const Grid* grid = nullptr;
    ZoneId zone;
    std::vector<Occupant> occupants;  // sorted by id
    bool up_congested = false;        // prediction count only
    bool descend_ok = false;          // for the arrived_up node occupant, Rule 9 applied
    double eta = 0.5;
};

struct ZoneDecision {
    std::vector<TransitionCommand> commands;
    bool rule6 = false;
};

// Rules 2-8 for every occupant of one zone; draws consumed lazily in a fixed order.
ZoneDecision decide_zone(const ZoneDecisionInput& in, const std::function<double()>& draw);

// Single-UAS view of decide_zone / route following.
TransitionCommand step_decision(const Grid& grid, const UasState& uas, const CongestionView& view,
                                double rng_draw, const std::vector<Occupant>& others = {});

}  // namespace uasflow
