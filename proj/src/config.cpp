#include "uasflow/config.hpp"

#include <fstream>

#include "uasflow/error.hpp"

namespace uasflow {

using nlohmann::json;

json default_config_json() {
    return json::parse(R"({
      "grid": {"L": 5, "M": 3, "eta": 0.5, "X_e": 5, "Y_e": 10, "delta_T": 1.0,
               "segment": {"start": [0, 0]}, "no_fly": []},
      "arrivals": {"lambda": 0.2},
      "exogenous": {"enabled": false, "lambda_e": 0.0, "level": 2, "row_offset": 2, "dir": 1,
                    "mode": "in-plane"},
      "stop": {"uas": 1200, "slots": 0, "warmup": -1, "drain_cap": 200000, "measure_drain": false},
      "schedule": [],
      "seed": 1,
      "log_events": false
    })");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config-unreadable", path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config-parse-error", path + ": " + e.what());
    }
}

namespace {

Cell cell_of(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("invalid-cell", j.dump());
    return {j[0].get<int>(), j[1].get<int>()};
}

Rect rect_of(const json& j) { return {cell_of(j.at("lo")), cell_of(j.at("hi"))}; }

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
    json d = default_config_json();
    d.merge_patch(doc);
    ScenarioConfig cfg;
    cfg.raw = d;
    try {
        const json& gj = d.at("grid");
        DesignParams p;
        p.L = gj.at("L").get<int>();
        p.M = gj.at("M").get<int>();
        p.eta = gj.at("eta").get<double>();
        p.X_e = gj.at("X_e").get<int>();
        p.Y_e = gj.at("Y_e").get<int>();
        p.delta_T = gj.at("delta_T").get<double>();
        p.validate();

        if (gj.contains("cell_size") && gj.contains("safety_radius")) {
            double edge = gj["cell_size"].get<double>(), r = gj["safety_radius"].get<double>();
            if (edge < min_cell_edge(r))
                throw ConfigError("cell-too-small", "cell edge " + std::to_string(edge) + " < " +
                                                        std::to_string(min_cell_edge(r)));
        }

        const json& seg = gj.at("segment");
        Cell start = cell_of(seg.at("start"));
        Cell end = seg.contains("end") ? cell_of(seg["end"]) : Cell{start.x, start.y + p.Y_e * p.S()};
        std::vector<Rect> rects;
        for (const auto& r : gj.at("no_fly")) rects.push_back(rect_of(r));
        std::optional<Rect> ws;
        if (gj.contains("workspace")) ws = rect_of(gj["workspace"]);

        Scenario& sc = cfg.sim;
        sc.grid = build_grid(start, end, p, rects, ws);
        sc.lambda = d.at("arrivals").at("lambda").get<double>();

        const json& ej = d.at("exogenous");
        sc.exo.lambda_e = ej.at("lambda_e").get<double>();
        sc.exo.enabled = ej.at("enabled").get<bool>();
        sc.exo.level = ej.at("level").get<int>();
        sc.exo.row_offset = ej.at("row_offset").get<int>();
        sc.exo.dir = ej.at("dir").get<int>();
        std::string mode = ej.at("mode").get<std::string>();
        if (mode == "in-plane")
            cfg.exo_mode = ExoMode::InPlane;
        else if (mode == "out-of-plane")
            cfg.exo_mode = ExoMode::OutOfPlane;
        else
            throw ConfigError("invalid-exogenous", "mode must be in-plane or out-of-plane");

        const json& st = d.at("stop");
        sc.max_uas = st.at("uas").get<long>();
        sc.max_slots = st.at("slots").get<long>();
        sc.warmup = st.at("warmup").get<long>();
        sc.drain_cap = st.at("drain_cap").get<long>();
        sc.measure_drain = st.at("measure_drain").get<bool>();

        for (const auto& r : d.at("schedule")) {
            MRule m;
            m.M = r.at("M").get<int>();
            if (r.contains("levels")) {
                m.level_lo = r["levels"].at(0).get<int>();
                m.level_hi = r["levels"].at(1).get<int>();
            }
            if (r.contains("slots")) {
                m.slot_lo = r["slots"].at(0).get<long>();
                m.slot_hi = r["slots"].at(1).get<long>();
            }
            sc.m_schedule.push_back(m);
        }
        sc.seed = d.at("seed").get<std::uint64_t>();
        sc.log_events = d.at("log_events").get<bool>();
        sc.validate();
    } catch (const json::exception& e) {
        throw ConfigError("config-invalid", e.what());
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) { return scenario_from_json(read_json_file(path)); }

AnalyticScenario analytic_view(const ScenarioConfig& cfg) {
    const Scenario& sc = cfg.sim;
    AnalyticScenario a;
    a.grid = &sc.grid;
    a.lambda = sc.lambda;
    if (sc.exo.enabled) {
        a.lambda_e = sc.exo.lambda_e;
        a.exo_level = sc.exo.level;
        a.exo_mode = cfg.exo_mode;
    }
    for (int l = 1; l <= sc.grid.Y_e() + 1; ++l) a.m_by_level.push_back(sc.M_at(l, 0));
    return a;
}

}  // namespace uasflow
