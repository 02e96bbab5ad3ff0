#include "uasflow/sim.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

#include "uasflow/error.hpp"

namespace uasflow {

namespace {

std::uint64_t key(Cell c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
           static_cast<std::uint32_t>(c.y);
}

int branch_of(const Grid& g, ZoneId z, Cell c) {
    if (outward_sign(z) != 0) return 0;
    int d = c.x - g.node(z).x;
    return d > 0 ? 1 : (d < 0 ? -1 : 0);
}

// 0 none, 1 Stream(0) gamma, 2 beta, 3 Stream(X) gamma
int queue_kind(ZoneId z, int j, int L) {
    if (j == L + 1) return 0;
    if (outward_sign(z) == 0) return 1;
    if (j >= L + 2) return 3;
    return j >= 2 ? 2 : 0;
}

}  // namespace

Grid default_grid() {
    DesignParams p;
    return build_grid({0, 0}, {0, p.Y_e * p.S()}, p, {});
}

int Scenario::M_at(int level, long slot) const {
    int M = grid.params().M;
    for (const auto& r : m_schedule)
        if (level >= r.level_lo && level <= r.level_hi && slot >= r.slot_lo && slot <= r.slot_hi) M = r.M;
    return M;
}

void Scenario::validate() const {
    grid.params().validate();
    const int S = grid.S();
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("invalid-lambda", "lambda must be in [0,1]");
    if (max_uas < 0 || max_slots < 0) throw ConfigError("invalid-stop", "stop criteria must be non-negative");
    if (max_uas == 0 && max_slots == 0) throw ConfigError("invalid-stop", "set a UAS count or a slot count");
    if (drain_cap < 0) throw ConfigError("invalid-stop", "drain cap must be non-negative");
    for (const auto& r : m_schedule)
        if (r.M < 2 || r.M > S) throw ConfigError("invalid-params", "scheduled M must satisfy 2 <= M <= S");
    if (exo.enabled) {
        if (!(exo.lambda_e >= 0.0 && exo.lambda_e <= 1.0))
            throw ConfigError("invalid-lambda", "lambda_e must be in [0,1]");
        if (exo.level < 1 || exo.level > grid.Y_e())
            throw ConfigError("invalid-exogenous", "exogenous level outside the grid");
        if (exo.row_offset < 0 || exo.row_offset >= S || exo.row_offset == grid.L())
            throw ConfigError("invalid-exogenous", "exogenous row must avoid the lateral paths");
        if (exo.dir != 1 && exo.dir != -1) throw ConfigError("invalid-exogenous", "direction must be +1 or -1");
    }
}

bool sample_arrival(double lambda, std::mt19937_64& rng) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return u < lambda;
}

double ZoneMetrics::mean_exogenous() const {
    double n = 0.0, s = 0.0;
    for (std::size_t i = 0; i < exo_hist.size(); ++i) {
        n += double(exo_hist[i]);
        s += double(i) * double(exo_hist[i]);
    }
    return n > 0 ? s / n : 0.0;
}

Simulator::Simulator(Scenario sc) : sc_(std::move(sc)), g_(sc_.grid), rng_(sc_.seed) {
    sc_.validate();
    if (sc_.warmup < 0) sc_.warmup = static_cast<long>(g_.Y_e()) * g_.S();
    lateral_.resize(g_.zones().size());
    for (const auto& z : g_.zones()) {
        ZoneMetrics zm;
        zm.zone = z.id;
        if (sc_.exo.enabled) zm.exo_hist.assign(static_cast<std::size_t>(g_.S() + 1), 0);
        m_.zones[z.id] = zm;
    }
}

double Simulator::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

void Simulator::log(long slot, int id, Cell c, const std::string& tag, const std::string& extra) {
    if (!sc_.log_events) return;
    std::string s = std::to_string(slot) + " " + std::to_string(id) + " " + std::to_string(c.x) + " " +
                    std::to_string(c.y) + " " + tag;
    if (!extra.empty()) s += " " + extra;
    m_.events.push_back(std::move(s));
}

bool Simulator::arrivals_active() const {
    bool active = true;
    if (sc_.max_uas > 0) active = active && m_.deployed < sc_.max_uas;
    if (sc_.max_slots > 0) active = active && slot_ < sc_.max_slots;
    return active;
}

bool Simulator::done() const { return !arrivals_active() && uas_.empty(); }

void Simulator::observe(bool in_window) {
    const int L = g_.L();
    for (auto& v : lateral_) v.clear();

    std::unordered_map<std::uint64_t, int> managed_at, exo_at;
    for (const auto& u : uas_) ++managed_at[key(u.cell)];
    for (const auto& e : exo_) ++exo_at[key(e.cell)];

    for (std::size_t i = 0; i < uas_.size(); ++i) {
        const auto& u = uas_[i];
        auto& tr = track_[i];
        if (u.in_service) {
            tr.q_zone = -1;
            tr.q_kind = 0;
            tr.q_run = 0;
            continue;
        }
        auto z = g_.zone_of(u.cell);
        if (!z || !g_.contains(*z) || !g_.on_lateral_row(u.cell))
            throw Error("internal-invariant-violation",
                        "UAS " + std::to_string(u.id) + " off the heading-reference graph");
        int j = g_.relative_position(*z, u.cell);
        int idx = g_.index(*z);
        lateral_[static_cast<std::size_t>(idx)].push_back({u.id, j, branch_of(g_, *z, u.cell), u.arrived_up});

        int kind = queue_kind(*z, j, L);
        if (kind != 0 && kind == tr.q_kind && idx == tr.q_zone)
            ++tr.q_run;
        else
            tr.q_run = kind != 0 ? 1 : 0;
        tr.q_kind = kind;
        tr.q_zone = idx;
        if (kind == 1 && tr.q_run > L) ++m_.violations.gamma0_deadline;
        if (kind == 3 && tr.q_run > L) ++m_.violations.gammaX_deadline;
        if (kind == 2 && tr.q_run > L - 1) ++m_.violations.beta_deadline;
    }

    std::vector<long> zone_pairs(static_cast<std::size_t>(g_.extended_count()), 0);
    for (const auto& [k, n] : managed_at) {
        long pairs = long(n) * (n - 1) / 2;
        auto it = exo_at.find(k);
        long ex = it == exo_at.end() ? 0 : long(n) * it->second;
        m_.internal_conflicts += pairs;
        m_.exogenous_conflicts += ex;
        if (pairs + ex > 0) {
            Cell c{static_cast<int>(static_cast<std::int32_t>(k >> 32)),
                   static_cast<int>(static_cast<std::int32_t>(k & 0xffffffffu))};
            auto z = g_.zone_of(c);
            if (z) {
                long& zp = zone_pairs[static_cast<std::size_t>(g_.extended_index(*z))];
                zp += pairs + ex;
                m_.max_zone_intrusions = std::max(m_.max_zone_intrusions, zp);
            }
        }
    }

    if (!in_window) return;
    ++m_.window_slots;

    std::vector<int> in_service(g_.zones().size(), 0), forced(g_.zones().size(), 0);
    for (const auto& u : uas_) {
        if (!u.in_service) continue;
        int idx = g_.index(u.route.system);
        ++in_service[static_cast<std::size_t>(idx)];
        if (u.forced_entry) ++forced[static_cast<std::size_t>(idx)];
    }
    std::vector<int> exo_in(static_cast<std::size_t>(g_.extended_count()), 0);
    for (const auto& e : exo_) {
        auto z = g_.zone_of(e.cell);
        if (z) ++exo_in[static_cast<std::size_t>(g_.extended_index(*z))];
    }

    for (const auto& zone : g_.zones()) {
        ZoneId z = zone.id;
        auto& zm = m_.zones[z];
        std::size_t idx = static_cast<std::size_t>(g_.index(z));
        int up_exo = exo_in[static_cast<std::size_t>(g_.extended_index({z.stream, z.level + 1}))];
        int M = sc_.M_at(z.level + 1, slot_);
        int managed = in_service[idx];
        int total = managed + up_exo;
        ++zm.slots;
        if (total >= M) ++zm.busy_slots;
        zm.in_service_sum += total;
        zm.managed_in_service_sum += managed;
        int q = 0;
        for (const auto& oc : lateral_[idx])
            if (queue_kind(z, oc.j, L) != 0) ++q;
        zm.queue_sum += q;
        if (managed > M) {
            ++zm.exceedances;
            if (managed - forced[idx] > M) ++zm.unexplained_exceedances;
        }
        if (!zm.exo_hist.empty()) {
            int n = std::min<int>(exo_in[static_cast<std::size_t>(g_.extended_index(z))],
                                  static_cast<int>(zm.exo_hist.size()) - 1);
            ++zm.exo_hist[static_cast<std::size_t>(n)];
        }
    }

    for (const auto& u : uas_) {
        int near = -1;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                std::uint64_t k = key({u.cell.x + dx, u.cell.y + dy});
                auto a = managed_at.find(k);
                if (a != managed_at.end()) near += a->second;
                auto b = exo_at.find(k);
                if (b != exo_at.end()) near += b->second;
            }
        m_.tau_le_1_samples += 1.0;
        if (near > 0) m_.tau_le_1_hits += 1.0;
    }
}

void Simulator::step() {
    const int L = g_.L(), S = g_.S(), Xe = g_.X_e(), Ye = g_.Y_e();
    const double eta = g_.params().eta;
    const bool active = arrivals_active();
    if (!active && arrival_end_ < 0) arrival_end_ = slot_;
    const bool in_window = slot_ >= sc_.warmup && (active || sc_.measure_drain);

    observe(in_window);

    std::vector<UasState> world = uas_;
    world.insert(world.end(), exo_.begin(), exo_.end());
    auto preds = predict_positions(world, g_, L);

    RuleContext ctx;
    ctx.grid = &g_;
    ctx.counts = prediction_counts(preds, g_);
    ctx.lateral = std::move(lateral_);
    ctx.M_at = [&](int level) { return sc_.M_at(level, slot_); };

    const double u_arr = uniform();
    const double u_exo = uniform();

    std::vector<TransitionCommand> cmds;
    std::unordered_map<int, bool> forced_ids;
    for (int Y = 1; Y <= Ye; ++Y) {
        std::map<int, bool> desc;
        for (int X = -Xe; X <= Xe; ++X) {
            if (X == 0) continue;
            ZoneId z{X, Y};
            const auto& occ = ctx.lateral[static_cast<std::size_t>(g_.index(z))];
            bool a_at_node = std::any_of(occ.begin(), occ.end(),
                                         [&](const Occupant& o) { return o.arrived_up && o.j == L + 1; });
            desc[X] = a_at_node && descend_condition(ctx, z);
        }
        if (desc[1] && desc[-1]) {
            if (uniform() < eta)
                desc[-1] = false;
            else
                desc[1] = false;
        }
        for (int X = -Xe; X <= Xe; ++X) {
            ZoneId z{X, Y};
            const auto& occ = ctx.lateral[static_cast<std::size_t>(g_.index(z))];
            if (occ.empty()) continue;
            if (g_.no_fly(z))
                throw Error("internal-invariant-violation", "managed UAS inside no-fly zone " + to_string(z));
            ZoneDecisionInput in;
            in.grid = &g_;
            in.zone = z;
            in.occupants = occ;
            in.eta = eta;
            ZoneId up{X, Y + 1};
            in.up_congested = ctx.counts[static_cast<std::size_t>(g_.extended_index(up))] >= sc_.M_at(Y + 1, slot_);
            in.descend_ok = X != 0 && desc[X];
            auto dec = decide_zone(in, [this] { return uniform(); });
            if (dec.rule6) {
                ++m_.rule6_events;
                if (in_window) ++m_.zones[z].rule6;
                log(slot_, 0, g_.node(z), "rule6", "zone=" + to_string(z));
                for (const auto& c : dec.commands)
                    if (c.tag == Tag::EnterService) forced_ids[c.uas_id] = true;
            }
            for (auto& c : dec.commands) cmds.push_back(std::move(c));
        }
    }
    lateral_ = std::move(ctx.lateral);

    for (const auto& u : uas_)
        if (u.in_service) cmds.push_back(step_decision(g_, u, {}, 0.0));

    std::unordered_map<int, std::size_t> pos;
    for (std::size_t i = 0; i < uas_.size(); ++i) pos[uas_[i].id] = i;

    const long next = slot_ + 1;
    for (const auto& c : cmds) {
        std::size_t i = pos.at(c.uas_id);
        auto& u = uas_[i];
        auto& tr = track_[i];
        int dx = c.target.x - u.cell.x, dy = c.target.y - u.cell.y;
        if (std::max(std::abs(dx), std::abs(dy)) != 1) ++m_.violations.non_adjacent_move;
        auto tz = g_.zone_of(c.target);
        if (!tz || g_.no_fly(*tz)) ++m_.violations.no_fly_target;
        if (dx == 0)
            ++tr.up;
        else if (dy == 0)
            ++tr.lat;
        else
            ++tr.diag;

        switch (c.tag) {
            case Tag::EnterService:
            case Tag::Descend: {
                u.in_service = true;
                u.route = *c.route;
                u.step = 1;
                u.entry_slot = slot_;
                u.forced_entry = forced_ids.count(u.id) > 0;
                u.arrived_up = false;
                ZoneId sys = u.route.system;
                if (u.route.length != S || u.route.end() != g_.node({sys.stream, sys.level + 1}))
                    ++m_.violations.reroute_length;
                if (in_window) {
                    ++m_.zones[sys].entries;
                    auto src = g_.zone_of(u.cell);
                    if (c.tag == Tag::Descend && src) ++m_.zones[*src].descents;
                }
                break;
            }
            case Tag::Outward:
                u.arrived_up = false;
                if (c.overflow) {
                    ++m_.overflow_events;
                    auto from = g_.zone_of(u.cell);
                    if (in_window && from) ++m_.zones[*from].overflows;
                    log(next, u.id, c.target, "overflow",
                        "from=" + (from ? to_string(*from) : std::string("?")) + " to=" + to_string(*c.overflow));
                }
                break;
            default:
                ++u.step;
                break;
        }
        u.cell = c.target;
        log(next, u.id, u.cell, to_string(c.tag));
        if (u.in_service && u.step >= u.route.length) {
            u.in_service = false;
            u.arrived_up = true;
            if (next - u.entry_slot != S) ++m_.violations.service_duration;
        }
    }

    // Only the Rule 6 pair may share a cell.
    {
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> at;
        for (std::size_t i = 0; i < uas_.size(); ++i) at[key(uas_[i].cell)].push_back(i);
        for (const auto& [k, v] : at) {
            if (v.size() < 2) continue;
            const auto& a = uas_[v[0]];
            bool ok = v.size() == 2 && (a.arrived_up != uas_[v[1]].arrived_up);
            auto z = g_.zone_of(a.cell);
            ok = ok && z && g_.node(*z) == a.cell && !uas_[v[0]].in_service && !uas_[v[1]].in_service;
            if (!ok) {
                std::ostringstream os;
                os << "UAS";
                for (auto i : v) os << " " << uas_[i].id;
                os << " share cell (" << a.cell.x << "," << a.cell.y << ") at slot " << next;
                throw Error("internal-invariant-violation", os.str());
            }
        }
    }

    // Deliveries.
    const int deliver_row = g_.delivery_row();
    for (std::size_t i = 0; i < uas_.size();) {
        auto& u = uas_[i];
        if (!u.in_service && u.cell.y == deliver_row) {
            auto& tr = track_[i];
            long flight = next - tr.deploy_slot;
            long delay = flight - long(Ye) * S;
            if (tr.up + tr.diag != Ye * S) ++m_.violations.path_length;
            if (tr.up + tr.diag + tr.lat != flight) ++m_.violations.transition_conservation;
            m_.up_transitions += tr.up;
            m_.diag_transitions += tr.diag;
            m_.lateral_transitions += tr.lat;
            m_.delay_sum += double(delay);
            m_.delay_max = std::max(m_.delay_max, delay);
            ++m_.delivered;
            log(next, u.id, u.cell, "deliver", "delay=" + std::to_string(delay));
            uas_.erase(uas_.begin() + static_cast<long>(i));
            track_.erase(track_.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }

    if (active && u_arr < sc_.lambda) {
        UasState u;
        u.id = next_id_++;
        u.cell = g_.node({0, 1});
        u.arrived_up = true;
        for (const auto& o : uas_)
            if (o.cell == u.cell) throw Error("internal-invariant-violation", "source node occupied");
        Track tr;
        tr.deploy_slot = next;
        uas_.push_back(u);
        track_.push_back(tr);
        ++m_.deployed;
        log(next, u.id, u.cell, "deploy");
    }

    if (sc_.exo.enabled) {
        const int edge = Xe * S + L;
        for (auto& e : exo_) e.cell.x += e.exo_dir;
        exo_.erase(std::remove_if(exo_.begin(), exo_.end(), [&](const UasState& e) { return std::abs(e.cell.x) > edge; }),
                   exo_.end());
        if (u_exo < sc_.exo.lambda_e) {
            UasState e;
            e.id = -(static_cast<int>(m_.slots_run) + 1);
            e.origin = Origin::Exogenous;
            e.exo_dir = sc_.exo.dir;
            e.cell = {-sc_.exo.dir * edge, (sc_.exo.level - 1) * S + sc_.exo.row_offset};
            exo_.push_back(e);
        }
    }

    ++slot_;
    m_.slots_run = slot_;
}

Metrics Simulator::finish() {
    m_.spread.clear();
    for (int Y = 1; Y <= g_.Y_e(); ++Y) {
        int lo = 0, hi = 0;
        for (int X = -g_.X_e(); X <= g_.X_e(); ++X) {
            if (m_.zones[{X, Y}].mean_managed_in_service() >= 1.0) {
                lo = std::min(lo, X);
                hi = std::max(hi, X);
            }
        }
        m_.spread.push_back({Y, {lo, hi}});
    }
    return m_;
}

Metrics run(const Scenario& sc) {
    Simulator sim(sc);
    long drain = 0;
    while (!sim.done()) {
        if (!sim.arrivals_active() && ++drain > sc.drain_cap)
            throw Error("non-termination-cap-exceeded",
                        "managed UAS still in flight after " + std::to_string(sc.drain_cap) + " drain slots");
        sim.step();
    }
    return sim.finish();
}

}  // namespace uasflow
