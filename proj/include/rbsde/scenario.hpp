#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbsde/backend.hpp"
#include "rbsde/driver.hpp"
#include "rbsde/region.hpp"

namespace rbsde::cli {

using nlohmann::json;

struct BackendConfig {
    std::string type = "regression";  // or "tree"
    std::size_t degree = 3;
};

struct SchemeConfig {
    std::vector<std::size_t> penalized;  // n values, sorted
    std::vector<std::size_t> piecewise;  // j values, sorted
};

struct ChecksConfig {
    double containment_c = 1.0;  // penalized containment threshold = c / n
    std::size_t skorokhod_processes = 10;
    bool apriori = true;
    std::vector<double> stability_deltas;  // terminal perturbation sizes
};

/// A fully resolved experiment: region, driver, terminal, discretization,
/// ensemble, backend and scheme parameters. `resolved` echoes the entire
/// configuration with every default filled in.
struct Scenario {
    std::string name;
    double horizon = 1.0;
    std::size_t m = 1, d = 1;
    region::RegionPath region;
    DriverSpec driver;
    TerminalSpec terminal;
    std::size_t steps = 200;
    std::uint64_t seed = 42;
    std::size_t paths = 10000;
    BackendConfig backend;
    SchemeConfig scheme;
    ChecksConfig checks;
    json resolved;
};

geom::ConvexSet set_from_json(const json& j);
json set_to_json(const geom::ConvexSet& s);

Scenario scenario_from_json(const json& j);
Scenario parse_scenario(const std::string& file_path);

/// Terminal shifted by a constant vector of size delta (optionally projected
/// back onto D_T so the perturbed problem stays admissible).
TerminalSpec perturb_terminal(const Scenario& s, double delta, bool project);

/// Runs the hypothesis validations; throws ScenarioError naming the first
/// violated hypothesis. Returns the validation summary as JSON.
json validate_scenario(const Scenario& s, const TimeGrid& grid, const BrownianEnsemble& ensemble);

}  // namespace rbsde::cli
