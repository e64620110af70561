#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rbsde/backend.hpp"
#include "rbsde/driver.hpp"
#include "rbsde/region.hpp"
#include "rbsde/solution.hpp"

namespace rbsde::verify {

/// One pass/fail statistic with its threshold and worst offender recorded
/// next to it; sub-statistics go to `extras`.
struct DiagnosticReport {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::int64_t worst_path = -1;
    double worst_time = -1.0;
    std::map<std::string, double> extras;
    std::string note;
};

/// max over nodes/states of dist(Y, D). For piecewise solutions pass the
/// discretization: the primary statistic is then measured against the
/// frozen sets the scheme projects onto (exact up to projection tolerance)
/// and the gap to the true region is reported in extras.
DiagnosticReport check_containment(const SolutionEnsemble& sol, const region::RegionPath& path,
                                   const CondExpBackend& backend, double threshold,
                                   const region::DiscretizedRegion* disc = nullptr);

/// Minimality of K: sum_k <Y_k - X_k, dK_k> <= tol * (1 + |K|_T) per path,
/// over `processes` admissible test processes (the witness, projected
/// seeded constants, projected perturbations of Y). Left limits are used at
/// atom nodes. Throws if a constructed test process is inadmissible.
DiagnosticReport check_skorokhod(const SolutionEnsemble& sol, const region::RegionPath& path,
                                 const CondExpBackend& backend, std::size_t processes = 10,
                                 std::uint64_t seed = 0x5C0Full, double tol_scale = 1e-3);

/// At declared region jumps: the stored atom equals
/// proj_{D_{s-}}(Y_s) - Y_s and -DeltaY_s, to 1e-10.
DiagnosticReport check_jump_projection(const SolutionEnsemble& sol,
                                       const region::RegionPath& path,
                                       const CondExpBackend& backend);

/// The a priori energy terms: E[(Y*)^2 + int ||Z||^2 + sum |dK|^2 + (K*)^2
/// + int dist(A_-, bd D_-) d|K|] against E[|xi|^2 + int |f(s,0,0)|^2] +
/// ||A||_{H2}^2. Pass means every term is finite; ratio stability under
/// path-count changes is judged by compare_apriori.
DiagnosticReport check_apriori(const SolutionEnsemble& sol, const region::RegionPath& path,
                               const CondExpBackend& backend, const DriverSpec& driver,
                               double witness_h2);

/// Relative ratio drift between two a priori reports (e.g. P vs P/2 runs).
DiagnosticReport compare_apriori(const DiagnosticReport& full, const DiagnosticReport& half,
                                 double tolerance = 0.2);

/// Perturbation energy of two solutions sharing region/driver/ensemble:
/// E sup |Ybar|^p, E int |Ybar|^{p-2} 1 ||Zbar||^2, and (p = 2) the jump
/// term sum |Delta Kbar|^2, all against E |xibar|^p. The composite
/// projection integrands are reported, not asserted.
DiagnosticReport check_stability(const SolutionEnsemble& sol, const SolutionEnsemble& other,
                                 const region::RegionPath& path, const CondExpBackend& backend,
                                 double p);

/// Discrete inward-direction inequality for K against the witness:
/// sum <Y_- - A_-, dK> <= -sum dist(A_-, bd D_-) d|K| + 1e-6 (1 + |K|_T).
DiagnosticReport check_inward_inequality(const SolutionEnsemble& sol,
                                         const region::RegionPath& path,
                                         const CondExpBackend& backend);

/// Per-node mean of the discrete equation residual
/// Y_k - [Y_{k+1} + f dt - Z dW + dK over (k, k+1]]; the statistic is the
/// worst node mean in units of its standard error (rectangular backends).
DiagnosticReport check_equation_residual(const SolutionEnsemble& sol,
                                         const CondExpBackend& backend);

}  // namespace rbsde::verify
