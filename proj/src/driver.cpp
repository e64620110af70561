#include "rbsde/driver.hpp"

#include <cmath>

#include "rbsde/random.hpp"

namespace rbsde {

double driver_lipschitz_excess(const DriverSpec& d, std::size_t m, std::size_t dim,
                               double horizon, std::size_t probes, std::uint64_t seed) {
    if (d.zero) return 0.0;
    const CounterRng rng(seed);
    Vec y(m), y2(m), z(m * dim), z2(m * dim), f1(m), f2(m);
    double worst = -1e300;
    for (std::size_t q = 0; q < probes; ++q) {
        const double t = horizon * rng.uniform(q, 0);
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = 3.0 * rng.normal(q, 10 + i);
            y2[i] = 3.0 * rng.normal(q, 40 + i);
        }
        for (std::size_t i = 0; i < m * dim; ++i) {
            z[i] = 3.0 * rng.normal(q, 100 + i);
            z2[i] = 3.0 * rng.normal(q, 200 + i);
        }
        d.eval(t, y, z, f1);
        d.eval(t, y2, z2, f2);
        const double lhs = dist2(f1, f2);
        const double rhs = d.mu * dist2(y, y2) + d.lambda * dist2(z, z2) + 1e-8;
        worst = std::max(worst, lhs - rhs);
    }
    return worst;
}

double driver_zero_l2(const DriverSpec& d, const TimeGrid& grid, std::size_t m,
                      std::size_t dim) {
    if (d.zero) return 0.0;
    Vec y(m, 0.0), z(m * dim, 0.0), f(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        d.eval(grid.time(k), y, z, f);
        acc += dot(f, f) * grid.dt(k);
    }
    return acc;
}

}  // namespace rbsde
