#pragma once

#include <climits>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "uasflow/grid.hpp"
#include "uasflow/rules.hpp"

namespace uasflow {

// M applied to zones judged at levels [level_lo, level_hi] during slots [slot_lo, slot_hi].
struct MRule {
    int level_lo = 1;
    int level_hi = INT_MAX;
    long slot_lo = 0;
    long slot_hi = LONG_MAX;
    int M = 2;
};

struct ExogenousConfig {
    bool enabled = false;
    double lambda_e = 0.0;
    int level = 2;       // zone level crossed
    int row_offset = 2;  // row inside the level band; must differ from L
    int dir = 1;         // +1 enters on the left edge
};

Grid default_grid();

struct Scenario {
    Grid grid = default_grid();
    double lambda = 0.2;
    ExogenousConfig exo;
    long max_uas = 1200;  // arrival phase ends after this many deployments (0 = unused)
    long max_slots = 0;   // or after this many slots (0 = unused)
    std::uint64_t seed = 1;
    std::vector<MRule> m_schedule;
    long warmup = -1;  // -1 = Y_e * S
    long drain_cap = 200000;
    bool measure_drain = false;
    bool log_events = false;

    int M_at(int level, long slot) const;
    void validate() const;  // throws ConfigError
};

bool sample_arrival(double lambda, std::mt19937_64& rng);

struct ZoneMetrics {
    ZoneId zone;
    long slots = 0;
    long busy_slots = 0;
    double in_service_sum = 0.0;  // managed in service plus exogenous in Z_UP
    double managed_in_service_sum = 0.0;
    double queue_sum = 0.0;
    long overflows = 0;
    long entries = 0;
    long descents = 0;
    long rule6 = 0;
    long exceedances = 0;              // managed in service > M
    long unexplained_exceedances = 0;  // same, after discounting Rule 6 forced entries
    std::vector<long> exo_hist;        // exogenous count inside this zone, per slot

    double busy_fraction() const { return slots ? double(busy_slots) / double(slots) : 0.0; }
    double mean_in_service() const { return slots ? in_service_sum / double(slots) : 0.0; }
    double mean_managed_in_service() const { return slots ? managed_in_service_sum / double(slots) : 0.0; }
    double mean_in_queue() const { return slots ? queue_sum / double(slots) : 0.0; }
    double overflow_rate() const { return slots ? double(overflows) / double(slots) : 0.0; }
    double mean_exogenous() const;
};

struct Violations {
    long service_duration = 0;
    long reroute_length = 0;
    long path_length = 0;
    long transition_conservation = 0;
    long gamma0_deadline = 0;
    long gammaX_deadline = 0;
    long beta_deadline = 0;
    long no_fly_target = 0;
    long non_adjacent_move = 0;

    long total() const {
        return service_duration + reroute_length + path_length + transition_conservation + gamma0_deadline +
               gammaX_deadline + beta_deadline + no_fly_target + non_adjacent_move;
    }
};

struct Metrics {
    long slots_run = 0;
    long window_slots = 0;
    long deployed = 0;
    long delivered = 0;
    long internal_conflicts = 0;   // managed pairs sharing a cell
    long exogenous_conflicts = 0;  // managed-exogenous pairs sharing a cell
    long rule6_events = 0;
    long overflow_events = 0;
    long max_zone_intrusions = 0;
    double tau_le_1_hits = 0.0;
    double tau_le_1_samples = 0.0;
    double delay_sum = 0.0;
    long delay_max = 0;
    long up_transitions = 0;
    long diag_transitions = 0;
    long lateral_transitions = 0;
    Violations violations;
    std::map<ZoneId, ZoneMetrics> zones;
    std::vector<std::pair<int, std::pair<int, int>>> spread;  // level -> [X_min, X_max]
    std::vector<std::string> events;

    double mean_delay() const { return delivered ? delay_sum / double(delivered) : 0.0; }
    double p_tau_le_1() const { return tau_le_1_samples > 0 ? tau_le_1_hits / tau_le_1_samples : 0.0; }
    long total_conflicts() const { return internal_conflicts + exogenous_conflicts; }
};

class Simulator {
public:
    explicit Simulator(Scenario sc);

    bool arrivals_active() const;
    bool done() const;
    void step();
    Metrics finish();

    long slot() const { return slot_; }
    const std::vector<UasState>& managed() const { return uas_; }
    const std::vector<UasState>& exogenous() const { return exo_; }
    const Metrics& metrics() const { return m_; }

private:
    struct Track {
        long deploy_slot = 0;
        int up = 0, diag = 0, lat = 0;
        int q_zone = -1, q_kind = 0, q_run = 0;
    };

    double uniform();
    void log(long slot, int id, Cell c, const std::string& tag, const std::string& extra = "");
    void observe(bool in_window);

    Scenario sc_;
    const Grid& g_;
    std::mt19937_64 rng_;
    long slot_ = 0;
    long arrival_end_ = -1;
    int next_id_ = 1;
    std::vector<UasState> uas_;
    std::vector<Track> track_;  // parallel to uas_
    std::vector<UasState> exo_;
    std::vector<std::vector<Occupant>> lateral_;
    Metrics m_;
};

Metrics run(const Scenario& sc);

}  // namespace uasflow
