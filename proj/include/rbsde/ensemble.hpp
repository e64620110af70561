#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rbsde/grid.hpp"

namespace rbsde {

/// Seeded d-dimensional Wiener increments on a time grid, P paths.
///
/// Draw (p, k, c) comes from a counter-based stream addressed by the path
/// and scalar index alone, so path p is bit-identical no matter how many
/// paths are generated alongside it. Gaussians are inverse-CDF transforms
/// of the uniform stream; increments carry variance t_{k+1} - t_k.
class BrownianEnsemble {
public:
    BrownianEnsemble() = default;

    static BrownianEnsemble generate(std::uint64_t seed, const TimeGrid& grid,
                                     std::size_t dim, std::size_t paths);

    std::uint64_t seed() const { return seed_; }
    std::size_t paths() const { return paths_; }
    std::size_t dim() const { return dim_; }
    const TimeGrid& grid() const { return grid_; }

    /// Increment W_{t_{k+1}} - W_{t_k} of path p (d values).
    std::span<const double> increment(std::size_t p, std::size_t k) const {
        return {inc_.data() + (p * grid_.steps() + k) * dim_, dim_};
    }

    /// W_{t_k} of path p (d values); W_0 = 0.
    std::span<const double> value(std::size_t p, std::size_t k) const {
        return {w_.data() + (p * (grid_.steps() + 1) + k) * dim_, dim_};
    }

private:
    std::uint64_t seed_ = 0;
    std::size_t paths_ = 0, dim_ = 0;
    TimeGrid grid_;
    std::vector<double> inc_;  // paths x N x d
    std::vector<double> w_;    // paths x (N+1) x d
};

/// Configured allocation cap (env RBSDE_MEMORY_BUDGET_MB, default 2048).
std::size_t memory_budget_bytes();

/// Monte Carlo H^2-norm estimate of a semimartingale sampled on a grid:
/// ||X|| = || [M]_T^{1/2} ||_{L2} + || |B|_T ||_{L2}, with the
/// martingale/drift split supplied per path as separate sample arrays
/// (paths x (N+1) x m, flat).
double h2_norm_estimate(std::span<const double> martingale_part,
                        std::span<const double> drift_part, std::size_t paths,
                        std::size_t nodes, std::size_t m);

}  // namespace rbsde
