#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbsde/scenario.hpp"
#include "rbsde/solvers.hpp"
#include "rbsde/verification.hpp"

namespace rbsde::cli {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> threads;

    json to_json() const;
    void apply(Scenario& s) const;
};

inline constexpr const char* kCsvSchemaVersion = "1";

/// Everything one invocation produces; write_outputs serializes it.
struct RunArtifacts {
    json result;                  // full machine-readable report
    std::string checks_csv;       // one row per check
    std::string convergence_csv;  // sweep tables (may be empty)
    bool all_pass = true;
};

/// Shared grid/ensemble/backend prepared for a scenario (the grid contains
/// every declared jump and every segment time of the configured sweeps).
struct Workbench {
    TimeGrid grid;
    BrownianEnsemble ensemble;
    std::unique_ptr<CondExpBackend> backend;
    std::unique_ptr<BrownianEnsemble> half_ensemble;  // apriori stability
    std::unique_ptr<CondExpBackend> half_backend;
    json validation;

    static Workbench prepare(const Scenario& s, bool with_half);
};

/// validate | run | sweep | compare, as one orchestration entry point.
RunArtifacts run_scenario(const Scenario& s, bool sweep_tables, bool cross_compare);
json validate_only(const Scenario& s);

/// Rebuilds the convergence table from saved result.json payloads.
std::string convergence_report_csv(const std::vector<json>& results);

/// Writes result.json / checks.csv / convergence.csv under out_dir.
void write_outputs(const RunArtifacts& a, const std::string& out_dir);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace rbsde::cli
