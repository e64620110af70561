#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "rbsde/grid.hpp"
#include "rbsde/linalg.hpp"

namespace rbsde {

/// Generator f(t, y, z) -> R^m with declared Lipschitz constants in y and z.
/// z is the m-by-d matrix flattened row-major.
struct DriverSpec {
    std::function<void(double t, std::span<const double> y, std::span<const double> z,
                       std::span<double> out)>
        f;
    double mu = 0.0;
    double lambda = 0.0;
    bool zero = true;  // fast path and exact-K bookkeeping for f == 0

    void eval(double t, std::span<const double> y, std::span<const double> z,
              std::span<double> out) const {
        if (zero) {
            for (auto& v : out) v = 0.0;
        } else {
            f(t, y, z, out);
        }
    }
};

/// Terminal value as a function of the terminal Brownian state (all built-in
/// families are Markov in W_T). When containment is required the solvers
/// verify the value lies in D_T per path.
struct TerminalSpec {
    std::function<void(std::span<const double> w_terminal, std::span<double> out)> xi;
    bool requires_containment = true;
};

/// Sampled check of the declared Lipschitz constants: random probe pairs
/// (y, z), (y', z') at grid times must satisfy
/// |f(t,y,z) - f(t,y',z')| <= mu |y-y'| + lambda ||z-z'|| + 1e-8.
/// Returns the worst excess (positive means the declaration is violated).
double driver_lipschitz_excess(const DriverSpec& d, std::size_t m, std::size_t dim, double horizon,
                               std::size_t probes = 512, std::uint64_t seed = 7771);

/// Estimate of integral |f(s,0,0)|^2 ds on the grid (finite by construction
/// for the built-in families; reported for the a priori bound).
double driver_zero_l2(const DriverSpec& d, const TimeGrid& grid, std::size_t m, std::size_t dim);

}  // namespace rbsde
