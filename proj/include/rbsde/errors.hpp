#pragma once

#include <stdexcept>
#include <string>

namespace rbsde {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : Error {
    using Error::Error;
};

struct RegionError : Error {
    using Error::Error;
};

struct EngineError : Error {
    using Error::Error;
};

struct SolverError : Error {
    using Error::Error;
};

// Scenario-level validation failure; carries the violated hypothesis tag
// ("H1".."H4") so callers can surface it verbatim.
struct ScenarioError : Error {
    std::string hypothesis;
    ScenarioError(std::string hyp, const std::string& what)
        : Error("(" + hyp + ") " + what), hypothesis(std::move(hyp)) {}
    explicit ScenarioError(const std::string& what) : Error(what) {}
};

}  // namespace rbsde
