#pragma once

#include <span>
#include <vector>

#include "rbsde/backend.hpp"
#include "rbsde/driver.hpp"
#include "rbsde/region.hpp"
#include "rbsde/solution.hpp"

namespace rbsde::solver {

struct SolveContext {
    const region::RegionPath* region = nullptr;
    const DriverSpec* driver = nullptr;
    const TerminalSpec* terminal = nullptr;
    const CondExpBackend* backend = nullptr;
    std::size_t m = 1;
    double penalty_tol = 1e-10;
    std::size_t penalty_max_iter = 10000;
};

struct SolveOutput {
    SolutionEnsemble sol;
    SolverReport report;
};

/// Backward scheme on a constant region G = D_0: project each node value
/// onto G, reflection increments go to the continuous bucket of K.
SolveOutput solve_fixed_domain(const SolveContext& ctx);

/// Local problem on the node range [from, to] with one frozen set for all
/// states and terminal `zeta` (count(to) * m values, must lie in the set).
/// K is re-based to zero at the range start.
SolveOutput solve_local(const SolveContext& ctx, const geom::ConvexSet& frozen,
                        std::size_t node_from, std::size_t node_to,
                        std::span<const double> zeta);

/// Piecewise-constant-region scheme: solve local problems per segment and
/// glue them with projection atoms at segment boundaries
/// (left limit = projection of the right value onto the left frozen set).
SolveOutput solve_piecewise(const SolveContext& ctx, const region::DiscretizedRegion& disc);

/// Implicit penalization: at each node solve
///   y = yhat - n dt (y - proj_{D_t}(y))
/// by the contraction y <- (yhat + n dt proj(y)) / (1 + n dt), accumulate
/// -n (y - proj(y)) dt into the continuous bucket, and apply explicit
/// projection atoms at region jumps whose capped discontinuity exceeds 1/n.
/// No terminal projection of Y: containment holds only up to O(1/n).
SolveOutput solve_penalized(const SolveContext& ctx, std::size_t n);

enum class SchemeKind { penalized, piecewise };

struct SweepStep {
    double param_lo = 0.0, param_hi = 0.0;
    SolutionDistance dist;
};

struct SweepResult {
    std::vector<double> parameters;
    std::vector<SolverReport> reports;
    std::vector<SweepStep> steps;   // successive-pair distances
    SolveOutput final_run;          // full output of the largest parameter
    bool decreasing_y = true;       // strictly decreasing successive dy
};

/// Runs the scheme for each parameter (sorted ascending) on the shared
/// backend/grid and reports successive solution distances. Only the final
/// run's solution is retained; `per_run` (optional) sees each solution
/// before the previous one is dropped.
SweepResult convergence_sweep(
    const SolveContext& ctx, SchemeKind kind, std::span<const std::size_t> parameters,
    const std::function<void(std::size_t param, const SolveOutput&)>& per_run = {});

}  // namespace rbsde::solver
