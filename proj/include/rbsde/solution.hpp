#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rbsde/grid.hpp"
#include "rbsde/linalg.hpp"

namespace rbsde {

/// Discrete solution triple (Y, Z, K) on a grid, per backend state.
///
/// K bookkeeping: the increment produced while stepping node k+1 -> k is
/// attached to the interval (t_k, t_{k+1}] (kc_inc[k], the "continuous"
/// bucket), and region-jump corrections are atoms of K at their node
/// (kd_atom[k], the jump bucket). Cumulative K at t_k is the sum of earlier
/// interval increments plus atoms at nodes <= k; K_0 = 0 always. Left
/// limits of Y at atom nodes are stored explicitly in y_pre.
struct SolutionEnsemble {
    TimeGrid grid;
    std::size_t m = 1, d = 1;
    std::size_t node_begin = 0, node_end = 0;  // inclusive node range covered
    std::vector<std::size_t> counts;           // states per node
    std::vector<std::vector<double>> y;        // [N+1] -> counts[k] * m
    std::vector<std::vector<double>> y_pre;    // left limits at atom nodes, else empty
    std::vector<std::vector<double>> z;        // [N]   -> counts[k] * m * d
    std::vector<std::vector<double>> f_term;   // [N]   -> counts[k] * m, driver value used
    std::vector<std::vector<double>> kc_inc;   // [N]   -> counts[k] * m
    std::vector<std::vector<double>> kd_atom;  // [N+1] -> counts[k] * m, empty when no atom
    std::string scheme;
    double parameter = 0.0;

    bool rectangular() const {
        for (std::size_t k = node_begin; k <= node_end; ++k)
            if (counts[k] != counts[node_begin]) return false;
        return true;
    }
    std::size_t paths() const { return counts[node_begin]; }

    std::span<const double> y_at(std::size_t k, std::size_t i) const {
        return {y[k].data() + i * m, m};
    }
    bool has_atom(std::size_t k) const { return !kd_atom[k].empty(); }
    std::span<const double> atom_at(std::size_t k, std::size_t i) const {
        return {kd_atom[k].data() + i * m, m};
    }
    /// Y_{t_k-}: the stored left limit at atom nodes, otherwise Y_{t_k}.
    std::span<const double> y_left_at(std::size_t k, std::size_t i) const {
        if (!y_pre[k].empty()) return {y_pre[k].data() + i * m, m};
        return y_at(k, i);
    }
    std::span<const double> z_at(std::size_t k, std::size_t i) const {
        return {z[k].data() + i * m * d, m * d};
    }
    std::span<const double> kc_at(std::size_t k, std::size_t i) const {
        return {kc_inc[k].data() + i * m, m};
    }

    // Per-path K statistics; meaningful for rectangular ensembles.
    Vec k_cumulative(std::size_t k, std::size_t p) const;  // K_{t_k}
    double k_variation(std::size_t p) const;               // |K|_T
    double k_sup(std::size_t p) const;                     // sup_k |K_{t_k}|
    double k_jump_sumsq(std::size_t p) const;              // sum of |atom|^2
};

struct SolverReport {
    std::string scheme;
    double parameter = 0.0;
    std::string backend;
    std::size_t grid_steps = 0;
    std::size_t states = 0;
    double wall_ms = 0.0;
    double containment_max = 0.0;          // vs the sets the scheme projects onto
    double k_variation_mean = 0.0;
    double k_variation_max = 0.0;
    double terminal_projection_max = 0.0;  // |proj(xi) - xi| at T (piecewise)
    std::size_t penalty_iter_max = 0;
};

struct SolutionDistance {
    double dy = 0.0;  // mean over paths of min(sup_k |Ybar_k|, 1)
    double dz = 0.0;  // mean of min(sum_k ||Zbar_k||^2 dt_k, 1)
    double dk = 0.0;  // mean of min(sup_k |Kbar_{t_k}|, 1)
};

/// The capped sup/L2 metrics evaluated empirically over a shared ensemble.
/// Both solutions must share the grid and state layout.
SolutionDistance solution_distance(const SolutionEnsemble& a, const SolutionEnsemble& b);

}  // namespace rbsde
