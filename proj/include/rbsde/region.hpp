#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbsde/ensemble.hpp"
#include "rbsde/geometry.hpp"
#include "rbsde/grid.hpp"

namespace rbsde::region {

using geom::ConvexSet;

using SetRule = std::function<ConvexSet(double, std::span<const double>)>;
using PointRule = std::function<Vec(double, std::span<const double>)>;

/// The time-dependent region t -> D_t together with its interior witness A.
///
/// Rules are pure functions of (t, state) where `state` is the driving
/// Brownian value at t for adapted regions (deterministic rules ignore it).
/// Discontinuities in t must be declared up front; between declared jumps a
/// snapshot rule is continuous, which validate_h4 checks numerically.
struct RegionPath {
    double horizon = 1.0;
    std::size_t dim = 1;          // m
    bool state_dependent = false;
    std::vector<double> jump_times;  // sorted, in (0, T)
    SetRule snapshot_rule;
    SetRule left_rule;               // value approached from the left at a declared jump
    PointRule witness_rule;          // A_t, claimed interior with margin below
    PointRule witness_left_rule;
    PointRule witness_mart_rule;     // martingale part of A (zero when absent)
    double margin = 0.0;             // claimed inf_t dist(A_t, boundary of D_t)
    double rho_lipschitz = 0.0;      // |rho(D_t, D_s)| <= lip |t-s| between jumps
    double state_lipschitz = 0.0;    // extra modulus in |state - state'| for adapted paths
    double bound_radius = 0.0;       // sup_t sup_{x in D_t} |x|

    ConvexSet snapshot(double t, std::span<const double> state = {}) const;
    ConvexSet left_limit(double t, std::span<const double> state = {}) const;
    Vec witness(double t, std::span<const double> state = {}) const;
    Vec witness_left(double t, std::span<const double> state = {}) const;
    bool is_jump_time(double t, double tol = 1e-12) const;
};

/// Piecewise-constant discretization: segment times
/// 0 = s_0 < s_1 < ... < s_{k+1} = T; on [s_i, s_{i+1}) the region is frozen
/// at its value at s_i (per path when adapted), and the value at T is the
/// last frozen set.
struct DiscretizedRegion {
    std::vector<double> times;

    std::size_t segments() const { return times.size() - 1; }
    /// Segment index whose half-open interval contains t (t = T maps to the
    /// last segment).
    std::size_t segment_of(double t) const;
};

/// Declared jump times whose region discontinuity, capped to B(0,n),
/// exceeds 1/n in the Hausdorff metric.
std::vector<double> penalization_jump_times(const RegionPath& path, std::size_t n,
                                            std::span<const double> state = {},
                                            std::size_t directions = 512);

/// Segment times s_i = (s_{i-1} + a_i) ∧ (next declared jump of size > 1/j)
/// ∧ T with a_i in [1/j, 2/j] (default 1/j). The jump infimum ranges over
/// declared jumps only.
DiscretizedRegion discretize(const RegionPath& path, std::size_t j,
                             const std::function<double(std::size_t)>& segment_pick = {});

/// max over grid nodes of rho(frozen set, true snapshot).
double uniform_gap(const RegionPath& path, const DiscretizedRegion& disc, const TimeGrid& grid,
                   std::span<const double> state = {}, std::size_t directions = 256);

struct H4Report {
    bool pass = false;
    double min_margin = 0.0;
    double max_continuity_rho = 0.0;  // worst inter-node rho not explained by the modulus
    double terminal_rho = 0.0;        // rho(D_T, D_{T-})
    double h2_estimate = 0.0;         // witness H^2 proxy on the grid
    double first_violation_time = -1.0;
    std::int64_t first_violation_path = -1;
    std::string what;
};

/// Validates witness containment/margin at every grid node on sampled
/// paths, D_T = D_{T-}, continuity between declared jumps, and reports the
/// witness H^2 estimate. Fails on the first violated (path, time).
H4Report validate_h4(const RegionPath& path, const TimeGrid& grid,
                     const BrownianEnsemble* ensemble = nullptr,
                     std::size_t sample_paths = 32, std::size_t directions = 128);

// --- built-in families ---------------------------------------------------

RegionPath make_constant_region(ConvexSet set, std::optional<Vec> witness, double margin);

/// Box of fixed halfwidth whose center is amplitude * sin(pi*(freq*t + phase)).
RegionPath make_moving_box(Vec halfwidth, Vec amplitude, double freq, Vec phase, double margin);

/// Ball with radius r0 + amp * sin(pi * freq * t) about a fixed center.
RegionPath make_breathing_ball(Vec center, double r0, double amp, double freq, double margin);

/// 2-d polytope whose face normals rotate at angular rate omega about the
/// origin (which stays interior).
RegionPath make_rotating_polytope(std::vector<geom::Halfspace> faces, double omega, double margin);

/// Right-continuous piecewise-constant region with declared jumps.
RegionPath make_piecewise_region(std::vector<double> jump_times, std::vector<ConvexSet> pieces,
                                 std::vector<Vec> witnesses, double margin);

/// Adapted family: base set translated by beta * W_t (first m coordinates);
/// the witness follows the translation, so the margin is constant.
RegionPath make_witness_translated(ConvexSet base, std::optional<Vec> base_witness, double beta,
                                   double margin, double state_radius_allowance);

}  // namespace rbsde::region
