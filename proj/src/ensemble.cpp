#include "rbsde/ensemble.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "rbsde/linalg.hpp"
#include "rbsde/parallel.hpp"
#include "rbsde/random.hpp"

namespace rbsde {

std::size_t memory_budget_bytes() {
    if (const char* env = std::getenv("RBSDE_MEMORY_BUDGET_MB")) {
        const long mb = std::atol(env);
        if (mb > 0) return std::size_t(mb) * 1024 * 1024;
    }
    return std::size_t(2048) * 1024 * 1024;
}

BrownianEnsemble BrownianEnsemble::generate(std::uint64_t seed, const TimeGrid& grid,
                                            std::size_t dim, std::size_t paths) {
    if (paths == 0 || dim == 0) throw EngineError("ensemble needs paths >= 1, dim >= 1");
    const std::size_t N = grid.steps();
    const std::size_t need = (paths * N * dim + paths * (N + 1) * dim) * sizeof(double);
    if (need > memory_budget_bytes())
        throw EngineError("ensemble would need " + std::to_string(need / (1024 * 1024)) +
                          " MB, over the RBSDE_MEMORY_BUDGET_MB cap");

    BrownianEnsemble e;
    e.seed_ = seed;
    e.paths_ = paths;
    e.dim_ = dim;
    e.grid_ = grid;
    e.inc_.resize(paths * N * dim);
    e.w_.assign(paths * (N + 1) * dim, 0.0);

    std::vector<double> sqdt(N);
    for (std::size_t k = 0; k < N; ++k) sqdt[k] = std::sqrt(grid.dt(k));

    const CounterRng rng(seed);
    parallel_for(paths, [&](std::size_t p) {
        double* inc = e.inc_.data() + p * N * dim;
        double* w = e.w_.data() + p * (N + 1) * dim;
        for (std::size_t k = 0; k < N; ++k) {
            for (std::size_t c = 0; c < dim; ++c) {
                const double g = rng.normal(p, k * dim + c);
                inc[k * dim + c] = sqdt[k] * g;
                w[(k + 1) * dim + c] = w[k * dim + c] + inc[k * dim + c];
            }
        }
    });
    return e;
}

double h2_norm_estimate(std::span<const double> mart, std::span<const double> drift,
                        std::size_t paths, std::size_t nodes, std::size_t m) {
    if (mart.size() != paths * nodes * m || drift.size() != mart.size())
        throw EngineError("h2_norm_estimate: sample shape mismatch");
    double qv_mean = 0.0, var_mean = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        double qv = 0.0, tv = 0.0;
        for (std::size_t k = 0; k + 1 < nodes; ++k) {
            double dm2 = 0.0, db2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double dm = mart[(p * nodes + k + 1) * m + i] - mart[(p * nodes + k) * m + i];
                const double db = drift[(p * nodes + k + 1) * m + i] - drift[(p * nodes + k) * m + i];
                dm2 += dm * dm;
                db2 += db * db;
            }
            qv += dm2;
            tv += std::sqrt(db2);
        }
        qv_mean += qv;
        var_mean += tv * tv;
    }
    qv_mean /= double(paths);
    var_mean /= double(paths);
    return std::sqrt(qv_mean) + std::sqrt(var_mean);
}

}  // namespace rbsde
