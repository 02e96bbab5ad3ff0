#pragma once

#include <string>

#include <json.hpp>

#include "uasflow/analytics.hpp"
#include "uasflow/sim.hpp"

namespace uasflow {

struct ScenarioConfig {
    Scenario sim;
    ExoMode exo_mode = ExoMode::InPlane;
    nlohmann::json raw;  // merged document, kept for sweep and compare sections
};

nlohmann::json default_config_json();
nlohmann::json read_json_file(const std::string& path);  // throws ConfigError

// Builds and validates; throws ConfigError.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);

AnalyticScenario analytic_view(const ScenarioConfig& cfg);

}  // namespace uasflow
