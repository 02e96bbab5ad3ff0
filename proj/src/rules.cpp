#include "uasflow/rules.hpp"

#include <algorithm>
#include <cstdlib>

#include "uasflow/error.hpp"

namespace uasflow {

const char* to_string(Tag t) {
    switch (t) {
        case Tag::Upstream: return "upstream";
        case Tag::Outward: return "outward";
        case Tag::InwardDiag: return "inward-diag";
        case Tag::OutwardDiag: return "outward-diag";
        case Tag::EnterService: return "enter-service";
        case Tag::Descend: return "descend";
        case Tag::HoldExogenous: return "hold-exogenous";
    }
    return "?";
}

Cell Route::at(int t) const {
    int d = (n_diag >= length) ? t : std::min(t, n_diag);
    return {start.x + dx * d, start.y + t};
}

std::vector<Prediction> predict_positions(const std::vector<UasState>& world, const Grid& grid, int L) {
    std::vector<Prediction> out;
    out.reserve(world.size());
    for (const auto& u : world) {
        if (u.origin == Origin::Exogenous) {
            out.push_back({u.id, {u.cell.x + L * u.exo_dir, u.cell.y}});
            continue;
        }
        if (u.in_service) {
            out.push_back({u.id, u.route.at(u.step + L)});
            continue;
        }
        auto z = grid.zone_of(u.cell);
        if (!z || z->level > grid.Y_e() || !grid.on_lateral_row(u.cell)) continue;
        if (!grid.no_fly({z->stream, z->level + 1})) continue;
        int d = u.cell.x - grid.node(*z).x;
        int dir = outward_sign(*z);
        if (dir == 0) dir = (d > 0) ? 1 : (d < 0 ? -1 : 0);
        if (dir == 0) continue;  // Stream(0) node: branch not yet known
        out.push_back({u.id, {u.cell.x + L * dir, u.cell.y}});
    }
    return out;
}

std::vector<int> prediction_counts(const std::vector<Prediction>& preds, const Grid& grid) {
    std::vector<int> counts(static_cast<std::size_t>(grid.extended_count()), 0);
    for (const auto& p : preds) {
        auto z = grid.zone_of(p.cell_at_k_plus_L);
        if (z) ++counts[static_cast<std::size_t>(grid.extended_index(*z))];
    }
    return counts;
}

bool zone_congested(const std::vector<Prediction>& preds, const Grid& grid, ZoneId z, int M) {
    if (grid.no_fly(z)) return true;
    int n = 0;
    for (const auto& p : preds) {
        auto q = grid.zone_of(p.cell_at_k_plus_L);
        if (q && *q == z) ++n;
    }
    return n >= M;
}

bool descend_condition(const RuleContext& ctx, ZoneId z) {
    const Grid& g = *ctx.grid;
    int o = outward_sign(z);
    if (o == 0) return false;
    ZoneId in{z.stream - o, z.level};
    ZoneId id{z.stream - o, z.level + 1};
    if (g.no_fly(in) || g.no_fly(id)) return false;
    if (ctx.counts[static_cast<std::size_t>(g.extended_index(id))] >= ctx.M_at(id.level)) return false;
    return ctx.lateral[static_cast<std::size_t>(g.index(in))].empty();
}

namespace {

std::vector<Tag> reroute_moves(int psi, int S) {
    std::vector<Tag> m;
    int n = std::abs(psi);
    for (int i = 0; i < n; ++i) m.push_back(psi > 0 ? Tag::OutwardDiag : Tag::InwardDiag);
    while (static_cast<int>(m.size()) < S) m.push_back(Tag::Upstream);
    return m;
}

}  // namespace

Entrant select_entrant(const std::vector<Occupant>& occupants, int L, double tie_draw, double eta) {
    if (occupants.empty()) throw Error("empty-occupant-set", "select_entrant");
    const Occupant* best = nullptr;
    int best_psi = 0;
    for (const auto& o : occupants) {
        int psi = preference(o.j, L);
        if (!best || psi > best_psi) {
            best = &o;
            best_psi = psi;
        } else if (psi == best_psi && o.branch != best->branch) {
            bool right = tie_draw < eta;
            if ((right && o.branch > 0) || (!right && o.branch < 0)) best = &o;
        }
    }
    return {best->id, best_psi, reroute_moves(best_psi, 2 * L + 1)};
}

Route make_entry_route(const Grid& grid, ZoneId z, const Occupant& who) {
    const int L = grid.L(), S = grid.S();
    int o = outward_sign(z);
    int psi = preference(who.j, L);
    Route r;
    r.start = grid.lateral_cell(z, who.j, who.branch);
    r.length = S;
    r.system = z;
    r.n_diag = std::abs(psi);
    if (psi == 0) {
        r.kind = PathKind::Alpha;
    } else if (psi > 0) {
        r.kind = PathKind::BetaHat;
        r.index = who.j;
        r.dx = o;
    } else {
        r.kind = PathKind::GammaHat;
        r.index = -psi;
        r.dx = (o == 0) ? -who.branch : -o;
    }
    return r;
}

Route make_descend_route(const Grid& grid, ZoneId z) {
    int o = outward_sign(z);
    if (o == 0) throw Error("kind-invalid-for-stream-zero", "DeltaHat");
    Route r;
    r.start = grid.node(z);
    r.length = grid.S();
    r.n_diag = grid.S();
    r.dx = -o;
    r.kind = PathKind::DeltaHat;
    r.system = {z.stream - o, z.level};
    return r;
}

NodeConflictResolution resolve_node_conflict(const std::vector<Occupant>& node_occupants, int S,
                                             bool descend_ok) {
    const Occupant* beta = nullptr;
    const Occupant* up = nullptr;
    for (const auto& o : node_occupants) {
        if (o.arrived_up)
            up = &o;
        else
            beta = &o;
    }
    if (node_occupants.size() != 2 || !beta || !up)
        throw Error("invoked-without-conflict", "node is not shared by a beta and an upstream UAS");
    NodeConflictResolution r;
    r.beta_id = beta->id;
    r.up_id = up->id;
    r.beta_moves.assign(static_cast<std::size_t>(S), Tag::Upstream);
    if (descend_ok)
        r.up_moves.assign(static_cast<std::size_t>(S), Tag::InwardDiag);
    else
        r.up_moves = {Tag::Outward};
    return r;
}

ZoneDecision decide_zone(const ZoneDecisionInput& in, const std::function<double()>& draw) {
    const Grid& g = *in.grid;
    const ZoneId z = in.zone;
    const int L = g.L(), S = g.S();
    const int o = outward_sign(z);
    ZoneDecision out;
    if (in.occupants.empty()) return out;

    const bool up_nf = g.no_fly({z.stream, z.level + 1});
    bool right_closed = false, left_closed = false, out_closed = false;
    if (o == 0) {
        right_closed = g.no_fly({1, z.level});
        left_closed = g.no_fly({-1, z.level});
    } else {
        out_closed = g.no_fly({z.stream + o, z.level});
    }
    const bool all_closed = (o == 0) ? (right_closed && left_closed) : out_closed;
    const bool up_eff = up_nf ? true : (all_closed ? false : in.up_congested);

    auto closed_side = [&](int branch) { return o == 0 ? (branch > 0 ? right_closed : left_closed) : out_closed; };

    auto outward = [&](const Occupant& oc, int branch) {
        TransitionCommand c;
        c.uas_id = oc.id;
        c.tag = Tag::Outward;
        int side = (o == 0) ? branch : o;
        if (oc.j == S) {
            ZoneId next{z.stream + side, z.level};
            if (g.no_fly(next))
                throw Error("internal-invariant-violation",
                            "UAS " + std::to_string(oc.id) + " trapped at " + to_string(z));
            c.overflow = next;
        }
        c.target = g.lateral_cell(z, oc.j + 1, branch);
        return c;
    };
    auto node_branch = [&]() {
        if (right_closed && left_closed)
            throw Error("internal-invariant-violation", "Stream(0) node boxed in at " + to_string(z));
        if (right_closed) return -1;
        if (left_closed) return 1;
        return draw() < in.eta ? 1 : -1;
    };
    auto move_outward = [&](const Occupant& oc) {
        int b = oc.branch;
        if (o == 0 && oc.j == L + 1) b = node_branch();
        out.commands.push_back(outward(oc, b));
    };
    auto enter = [&](const Occupant& oc) {
        Route r = make_entry_route(g, z, oc);
        TransitionCommand c;
        c.uas_id = oc.id;
        c.tag = Tag::EnterService;
        c.target = r.at(1);
        c.route = r;
        out.commands.push_back(c);
    };
    auto descend = [&](const Occupant& oc) {
        Route r = make_descend_route(g, z);
        TransitionCommand c;
        c.uas_id = oc.id;
        c.tag = Tag::Descend;
        c.target = r.at(1);
        c.route = r;
        out.commands.push_back(c);
    };

    const Occupant* a_node = nullptr;
    const Occupant* c_node = nullptr;
    for (const auto& oc : in.occupants) {
        if (oc.j != L + 1) continue;
        if (oc.arrived_up && !a_node)
            a_node = &oc;
        else
            c_node = &oc;
    }

    if (a_node && c_node) {
        out.rule6 = true;
        auto res = resolve_node_conflict({*a_node, *c_node}, S, in.descend_ok && o != 0);
        for (const auto& oc : in.occupants) {
            if (oc.id == res.beta_id) {
                if (up_nf) {
                    move_outward(oc);
                } else {
                    enter(oc);
                }
            } else if (oc.id == res.up_id) {
                if (res.up_moves.size() > 1)
                    descend(oc);
                else if (up_nf)
                    throw Error("internal-invariant-violation",
                                "node conflict under no-fly Z_UP at " + to_string(z));
                else
                    move_outward(oc);
            } else {
                move_outward(oc);
            }
        }
        return out;
    }

    if (a_node && o != 0 && in.descend_ok) {
        for (const auto& oc : in.occupants) {
            if (&oc == a_node)
                descend(oc);
            else
                move_outward(oc);
        }
        return out;
    }

    if (!up_eff) {
        const Occupant* forced = nullptr;
        for (const auto& oc : in.occupants) {
            if (oc.j == S && closed_side(o == 0 ? oc.branch : o)) {
                if (forced)
                    throw Error("internal-invariant-violation", "two dead-end UAS at " + to_string(z));
                forced = &oc;
            }
        }
        int winner = 0;
        if (forced) {
            winner = forced->id;
        } else {
            bool tie = false;
            int best = -L - 1;
            for (const auto& oc : in.occupants) {
                int psi = preference(oc.j, L);
                if (psi == best) tie = true;
                if (psi > best) {
                    best = psi;
                    tie = false;
                }
            }
            double td = tie ? draw() : 0.0;
            winner = select_entrant(in.occupants, L, td, in.eta).uas_id;
        }
        for (const auto& oc : in.occupants) {
            if (oc.id == winner)
                enter(oc);
            else
                move_outward(oc);
        }
        return out;
    }

    for (const auto& oc : in.occupants) move_outward(oc);
    return out;
}

TransitionCommand step_decision(const Grid& grid, const UasState& uas, const CongestionView& view,
                                double rng_draw, const std::vector<Occupant>& others) {
    TransitionCommand c;
    c.uas_id = uas.id;
    if (uas.origin == Origin::Exogenous) {
        c.tag = Tag::HoldExogenous;
        c.target = {uas.cell.x + uas.exo_dir, uas.cell.y};
        return c;
    }
    if (uas.in_service) {
        int t = uas.step + 1;
        c.target = uas.route.at(t);
        if (c.target.x == uas.cell.x)
            c.tag = Tag::Upstream;
        else
            c.tag = uas.route.kind == PathKind::BetaHat ? Tag::OutwardDiag : Tag::InwardDiag;
        return c;
    }
    auto z = grid.zone_of(uas.cell);
    if (!z || !grid.contains(*z)) throw Error("uas-outside-grid", std::to_string(uas.id));
    ZoneDecisionInput in;
    in.grid = &grid;
    in.zone = *z;
    in.eta = grid.params().eta;
    in.up_congested = view.up_congested;
    in.descend_ok = !view.id_congested;
    in.occupants = others;
    Occupant self;
    self.id = uas.id;
    self.j = grid.relative_position(*z, uas.cell);
    int d = uas.cell.x - grid.node(*z).x;
    self.branch = outward_sign(*z) == 0 ? (d > 0 ? 1 : (d < 0 ? -1 : 0)) : 0;
    self.arrived_up = uas.arrived_up;
    in.occupants.push_back(self);
    std::sort(in.occupants.begin(), in.occupants.end(),
              [](const Occupant& a, const Occupant& b) { return a.id < b.id; });
    auto d_out = decide_zone(in, [&] { return rng_draw; });
    for (const auto& cmd : d_out.commands)
        if (cmd.uas_id == uas.id) return cmd;
    throw Error("internal-invariant-violation", "no command for UAS " + std::to_string(uas.id));
}

}  // namespace uasflow
