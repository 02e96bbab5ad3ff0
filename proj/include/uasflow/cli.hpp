#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "uasflow/analytics.hpp"
#include "uasflow/sim.hpp"

namespace uasflow {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t point_seed(std::uint64_t base, std::uint64_t index);

nlohmann::json metrics_to_json(const Metrics& m);
std::string zones_csv(const Metrics& m);  // stream,level,busy_fraction,mean_in_service,mean_in_queue,overflow_rate
std::string analytic_csv(const SpreadResult& r);
nlohmann::json sim_spread_json(const Metrics& m);
nlohmann::json analytic_spread_json(const SpreadResult& r);

// Exit status: 0 success, 1 runtime or tolerance failure, 2 configuration error.
int run_cli(int argc, char** argv);

}  // namespace uasflow
