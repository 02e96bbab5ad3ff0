#include "uasflow/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "uasflow/config.hpp"
#include "uasflow/error.hpp"

namespace uasflow {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t point_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 1));
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("output-unwritable", tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

json zone_key(ZoneId z) { return json{{"stream", z.stream}, {"level", z.level}}; }

}  // namespace

json metrics_to_json(const Metrics& m) {
    json j;
    j["slots_run"] = m.slots_run;
    j["window_slots"] = m.window_slots;
    j["deployed"] = m.deployed;
    j["delivered"] = m.delivered;
    j["conflicts"] = {{"internal", m.internal_conflicts},
                      {"exogenous", m.exogenous_conflicts},
                      {"total", m.total_conflicts()},
                      {"max_zone_intrusions", m.max_zone_intrusions}};
    j["rule6_events"] = m.rule6_events;
    j["overflow_events"] = m.overflow_events;
    j["p_tau_le_1"] = m.p_tau_le_1();
    j["delay"] = {{"mean", m.mean_delay()}, {"max", m.delay_max}};
    j["transitions"] = {
        {"upstream", m.up_transitions}, {"diagonal", m.diag_transitions}, {"lateral", m.lateral_transitions}};
    const auto& v = m.violations;
    j["violations"] = {{"service_duration", v.service_duration},
                       {"reroute_length", v.reroute_length},
                       {"path_length", v.path_length},
                       {"transition_conservation", v.transition_conservation},
                       {"gamma0_deadline", v.gamma0_deadline},
                       {"gammaX_deadline", v.gammaX_deadline},
                       {"beta_deadline", v.beta_deadline},
                       {"no_fly_target", v.no_fly_target},
                       {"non_adjacent_move", v.non_adjacent_move},
                       {"total", v.total()}};
    json zones = json::array();
    for (const auto& [id, z] : m.zones) {
        json r = zone_key(id);
        r["busy_fraction"] = z.busy_fraction();
        r["mean_in_service"] = z.mean_in_service();
        r["mean_managed_in_service"] = z.mean_managed_in_service();
        r["mean_in_queue"] = z.mean_in_queue();
        r["overflow_rate"] = z.overflow_rate();
        r["entries"] = z.entries;
        r["descents"] = z.descents;
        r["rule6"] = z.rule6;
        r["exceedances"] = z.exceedances;
        r["unexplained_exceedances"] = z.unexplained_exceedances;
        long n = 0;
        for (long c : z.exo_hist) n += c;
        if (n > 0 && z.mean_exogenous() > 0.0) {
            r["mean_exogenous"] = z.mean_exogenous();
            r["exogenous_histogram"] = z.exo_hist;
        }
        zones.push_back(r);
    }
    j["zones"] = zones;
    j["spread"] = sim_spread_json(m);
    return j;
}

std::string zones_csv(const Metrics& m) {
    std::ostringstream os;
    os << "stream,level,busy_fraction,mean_in_service,mean_in_queue,overflow_rate\n";
    for (const auto& [id, z] : m.zones)
        os << id.stream << "," << id.level << "," << fmt(z.busy_fraction()) << "," << fmt(z.mean_in_service())
           << "," << fmt(z.mean_in_queue()) << "," << fmt(z.overflow_rate()) << "\n";
    return os.str();
}

std::string analytic_csv(const SpreadResult& r) {
    std::ostringstream os;
    os << "stream,level,theta0,theta0_star,mean_in_service,mean_in_queue,phi,sigma,pi\n";
    for (const auto& [id, z] : r.zones)
        os << id.stream << "," << id.level << "," << fmt(z.theta0) << "," << fmt(z.theta0_star) << ","
           << fmt(z.mean_in_service) << "," << fmt(z.mean_in_queue) << "," << fmt(z.phi) << "," << fmt(z.sigma)
           << "," << fmt(z.pi) << "\n";
    return os.str();
}

json sim_spread_json(const Metrics& m) {
    json a = json::array();
    for (const auto& [level, s] : m.spread) a.push_back({{"level", level}, {"x_min", s.first}, {"x_max", s.second}});
    return a;
}

json analytic_spread_json(const SpreadResult& r) {
    json a = json::array();
    for (const auto& s : r.spread) a.push_back({{"level", s.level}, {"x_min", s.x_min}, {"x_max", s.x_max}});
    return a;
}

namespace {

struct Options {
    std::string config;
    std::string mode = "simulate";
    std::string out = "out";
    int replications = 1;
    double tolerance = 0.05;
    bool events = false;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda, lambda_e, eta;
    std::optional<int> M, L;
    std::optional<long> slots, uas;
};

json apply_overrides(json d, const Options& o) {
    if (o.seed) d["seed"] = *o.seed;
    if (o.lambda) d["arrivals"]["lambda"] = *o.lambda;
    if (o.lambda_e) {
        d["exogenous"]["lambda_e"] = *o.lambda_e;
        d["exogenous"]["enabled"] = *o.lambda_e > 0.0;
    }
    if (o.eta) d["grid"]["eta"] = *o.eta;
    if (o.M) d["grid"]["M"] = *o.M;
    if (o.L) d["grid"]["L"] = *o.L;
    if (o.slots) {
        d["stop"]["slots"] = *o.slots;
        if (!o.uas) d["stop"]["uas"] = 0;
    }
    if (o.uas) d["stop"]["uas"] = *o.uas;
    if (o.events) d["log_events"] = true;
    return d;
}

// Runs f(i) for i in [0, n) on a small thread pool; exceptions are stored per index.
template <class F>
std::vector<std::string> parallel_for(std::size_t n, F f) {
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), unsigned(n)));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        });
    for (auto& t : pool) t.join();
    return errors;
}

int cmd_simulate(const ScenarioConfig& cfg, const fs::path& out) {
    Metrics m = run(cfg.sim);
    write_atomic(out / "metrics.json", metrics_to_json(m).dump(2) + "\n");
    write_atomic(out / "zones.csv", zones_csv(m));
    write_atomic(out / "spread.json", sim_spread_json(m).dump(2) + "\n");
    if (cfg.sim.log_events) {
        std::string s;
        for (const auto& e : m.events) s += e + "\n";
        write_atomic(out / "events.log", s);
    }
    std::cout << "deployed " << m.deployed << ", delivered " << m.delivered << ", conflicts "
              << m.total_conflicts() << ", violations " << m.violations.total() << "\n";
    return 0;
}

int cmd_analyze(const ScenarioConfig& cfg, const fs::path& out) {
    SpreadResult r = expected_spread(analytic_view(cfg));
    write_atomic(out / "analytic_zones.csv", analytic_csv(r));
    write_atomic(out / "spread.json", analytic_spread_json(r).dump(2) + "\n");
    const auto& s = r.spread.front();
    std::cout << "level 1 spread [" << s.x_min << ", " << s.x_max << "]" << (r.flagged ? " (flagged)" : "") << "\n";
    return r.flagged ? 1 : 0;
}

int cmd_compare(const ScenarioConfig& cfg, const Options& o, const fs::path& out) {
    const json cj = cfg.raw.value("compare", json::object());
    const json tol = cj.value("tolerance", json::object());
    double tol_theta = o.tolerance;
    auto opt_tol = [&](const char* k) { return tol.contains(k) ? tol[k].get<double>() : INFINITY; };
    double tol_service = opt_tol("mean_in_service"), tol_queue = opt_tol("mean_in_queue"),
           tol_overflow = opt_tol("overflow");
    int tol_spread = tol.value("spread", 1);
    std::vector<ZoneId> zones;
    if (cj.contains("zones"))
        for (const auto& z : cj["zones"]) zones.push_back({z.at(0).get<int>(), z.at(1).get<int>()});

    const int R = std::max(1, o.replications);
    std::vector<Metrics> runs(static_cast<std::size_t>(R));
    auto errs = parallel_for(runs.size(), [&](std::size_t i) {
        Scenario sc = cfg.sim;
        sc.seed = point_seed(cfg.sim.seed, i);
        sc.log_events = false;
        runs[i] = run(sc);
    });
    for (const auto& e : errs)
        if (!e.empty()) throw Error("replication-failed", e);

    SpreadResult ana = expected_spread(analytic_view(cfg));
    bool pass = !ana.flagged;
    json rows = json::array();
    for (const auto& [id, a] : ana.zones) {
        if (!zones.empty() && std::find(zones.begin(), zones.end(), id) == zones.end()) continue;
        double busy = 0, serv = 0, queue = 0, ovf = 0;
        for (const auto& m : runs) {
            const auto& z = m.zones.at(id);
            busy += z.busy_fraction() / R;
            serv += z.mean_in_service() / R;
            queue += z.mean_in_queue() / R;
            ovf += z.overflow_rate() / R;
        }
        json r = zone_key(id);
        r["sim_busy_fraction"] = busy;
        r["theta0_star"] = a.theta0_star;
        r["delta_theta0"] = std::fabs(busy - a.theta0_star);
        r["sim_mean_in_service"] = serv;
        r["mean_in_service"] = a.mean_in_service;
        r["delta_mean_in_service"] = std::fabs(serv - a.mean_in_service);
        r["sim_mean_in_queue"] = queue;
        r["mean_in_queue"] = a.mean_in_queue;
        r["delta_mean_in_queue"] = std::fabs(queue - a.mean_in_queue);
        r["sim_overflow_rate"] = ovf;
        r["phi"] = a.phi;
        r["delta_overflow"] = std::fabs(ovf - a.phi);
        bool ok = r["delta_theta0"].get<double>() <= tol_theta &&
                  r["delta_mean_in_service"].get<double>() <= tol_service &&
                  r["delta_mean_in_queue"].get<double>() <= tol_queue &&
                  r["delta_overflow"].get<double>() <= tol_overflow;
        r["pass"] = ok;
        pass = pass && ok;
        rows.push_back(r);
    }
    json spread = json::array();
    for (std::size_t l = 0; l < ana.spread.size(); ++l) {
        const auto& a = ana.spread[l];
        double lo = 0, hi = 0;
        for (const auto& m : runs) {
            lo += double(m.spread[l].second.first) / R;
            hi += double(m.spread[l].second.second) / R;
        }
        bool ok = std::fabs(lo - a.x_min) <= tol_spread && std::fabs(hi - a.x_max) <= tol_spread;
        spread.push_back({{"level", a.level},
                          {"analytic", {a.x_min, a.x_max}},
                          {"simulated", {lo, hi}},
                          {"pass", ok}});
        pass = pass && ok;
    }
    json report{{"replications", R},
                {"tolerance", {{"theta0", tol_theta}, {"spread", tol_spread}}},
                {"analytic_flagged", ana.flagged},
                {"zones", rows},
                {"spread", spread},
                {"pass", pass}};
    write_atomic(out / "compare_report.json", report.dump(2) + "\n");
    std::cout << (pass ? "compare: pass" : "compare: tolerance breach") << "\n";
    return pass ? 0 : 1;
}

int cmd_sweep(const ScenarioConfig& cfg, const fs::path& out) {
    const json sj = cfg.raw.value("sweep", json::object());
    auto axis = [&](const char* k, json fallback) {
        json a = sj.value(k, json::array());
        return a.empty() ? json::array({fallback}) : a;
    };
    json lambdas = axis("lambda", cfg.sim.lambda), Ms = axis("M", cfg.sim.grid.params().M),
         etas = axis("eta", cfg.sim.grid.params().eta);
    bool simulate = sj.value("simulate", false);

    struct Point {
        double lambda, eta;
        int M;
    };
    std::vector<Point> pts;
    for (const auto& l : lambdas)
        for (const auto& m : Ms)
            for (const auto& e : etas) pts.push_back({l.get<double>(), e.get<double>(), m.get<int>()});
    if (pts.empty()) throw ConfigError("empty-sweep", "sweep grid has no points");

    fs::create_directories(out / "points");
    std::vector<std::string> csv(pts.size());
    auto errs = parallel_for(pts.size(), [&](std::size_t i) {
        json d = cfg.raw;
        d["arrivals"]["lambda"] = pts[i].lambda;
        d["grid"]["M"] = pts[i].M;
        d["grid"]["eta"] = pts[i].eta;
        d.erase("schedule");
        ScenarioConfig pc = scenario_from_json(d);
        SpreadResult r = expected_spread(analytic_view(pc));
        std::optional<Metrics> m;
        if (simulate) {
            pc.sim.seed = point_seed(cfg.sim.seed, i);
            pc.sim.log_events = false;
            m = run(pc.sim);
        }
        std::ostringstream os;
        for (const auto& [id, z] : r.zones) {
            os << fmt(pts[i].lambda) << "," << pts[i].M << "," << fmt(pts[i].eta) << "," << id.stream << ","
               << id.level << "," << fmt(z.theta0) << "," << fmt(z.theta0_star) << "," << fmt(z.mean_in_service)
               << "," << fmt(z.mean_in_queue) << "," << fmt(z.phi) << "," << fmt(z.sigma) << "," << fmt(z.pi);
            if (m) {
                const auto& s = m->zones.at(id);
                os << "," << fmt(s.busy_fraction()) << "," << fmt(s.mean_in_service()) << ","
                   << fmt(s.mean_in_queue()) << "," << fmt(s.overflow_rate());
            }
            os << "\n";
        }
        csv[i] = os.str();
        if (r.flagged) throw Error("residual-above-tolerance", "point " + std::to_string(i));
    });

    std::string header = "lambda,M,eta,stream,level,theta0,theta0_star,mean_in_service,mean_in_queue,phi,sigma,pi";
    if (simulate) header += ",sim_busy_fraction,sim_mean_in_service,sim_mean_in_queue,sim_overflow_rate";
    header += "\n";
    std::string all = header;
    json failures = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!csv[i].empty()) write_atomic(out / "points" / ("point_" + std::to_string(i) + ".csv"), header + csv[i]);
        all += csv[i];
        if (!errs[i].empty())
            failures.push_back({{"index", i},
                                {"lambda", pts[i].lambda},
                                {"M", pts[i].M},
                                {"eta", pts[i].eta},
                                {"error", errs[i]}});
    }
    write_atomic(out / "sweep.csv", all);
    write_atomic(out / "sweep_failures.json", failures.dump(2) + "\n");
    std::cout << pts.size() << " points, " << failures.size() << " failed\n";
    return failures.empty() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Congestion-aware UAS re-routing: simulator, queueing analytics and validation harness"};
    Options o;
    app.add_option("--config", o.config, "Scenario JSON file");
    app.add_option("--mode", o.mode, "simulate | analyze | compare | sweep")
        ->check(CLI::IsMember({"simulate", "analyze", "compare", "sweep"}));
    app.add_option("--seed", o.seed, "Base PRNG seed");
    app.add_option("--lambda", o.lambda, "Deployment probability per slot");
    app.add_option("--lambda-e", o.lambda_e, "Exogenous entry probability per slot");
    app.add_option("--M", o.M, "Congestion threshold");
    app.add_option("--eta", o.eta, "Right-branch probability");
    app.add_option("--L", o.L, "Half zone width");
    app.add_option("--slots", o.slots, "Arrival phase length in slots");
    app.add_option("--uas", o.uas, "Number of UAS to deploy");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--replications", o.replications, "Simulation replications for compare");
    app.add_option("--tolerance", o.tolerance, "Max |busy fraction - theta0*| for compare");
    app.add_flag("--events", o.events, "Write events.log");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    ScenarioConfig cfg;
    try {
        json d = default_config_json();
        if (!o.config.empty()) d.merge_patch(read_json_file(o.config));
        cfg = scenario_from_json(apply_overrides(d, o));
        fs::create_directories(o.out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        fs::path out = o.out;
        if (o.mode == "simulate") return cmd_simulate(cfg, out);
        if (o.mode == "analyze") return cmd_analyze(cfg, out);
        if (o.mode == "compare") return cmd_compare(cfg, o, out);
        return cmd_sweep(cfg, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace uasflow
