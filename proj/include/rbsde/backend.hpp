#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbsde/ensemble.hpp"

namespace rbsde {

/// Discrete conditional expectation E[ . | F_{t_k}] against a collection of
/// per-time states (Monte Carlo paths, or the nodes of a recombining tree).
/// `values` always has count(k+1) entries and the result count(k).
class CondExpBackend {
public:
    virtual ~CondExpBackend() = default;

    virtual std::size_t count(std::size_t k) const = 0;
    virtual std::size_t dim() const = 0;  // Brownian dimension d
    virtual const TimeGrid& grid() const = 0;
    /// Brownian value carried by state i at node k (d entries).
    virtual std::span<const double> state(std::size_t k, std::size_t i) const = 0;

    virtual std::vector<double> condexp(std::size_t k, std::span<const double> values) const = 0;
    /// E[ values * (DeltaW_k)_coord | F_{t_k} ].
    virtual std::vector<double> condexp_weighted(std::size_t k, std::span<const double> values,
                                                 std::size_t coord) const = 0;

    /// True when count(k) is the same at every node (per-path bookkeeping
    /// such as cumulative K only makes sense then).
    virtual bool rectangular() const = 0;
    virtual std::string describe() const = 0;
};

/// Extra per-state regression features (e.g. a region-boundary probe for
/// adapted regions): fills `out` given (node, state index).
struct FeatureHook {
    std::size_t extra = 0;
    std::function<void(std::size_t k, std::size_t i, std::span<double> out)> fill;
};

/// Least-squares projection of values onto total-degree <= degree
/// polynomials in the standardized state features at t_k. Fitted values are
/// the conditional-expectation estimate. Exactly linear; preserves
/// constants; at t_0 it degenerates to the plain average.
class RegressionBackend final : public CondExpBackend {
public:
    RegressionBackend(const BrownianEnsemble& ensemble, std::size_t degree,
                      FeatureHook hook = {});
    ~RegressionBackend() override;

    std::size_t count(std::size_t) const override;
    std::size_t dim() const override;
    const TimeGrid& grid() const override;
    std::span<const double> state(std::size_t k, std::size_t i) const override;
    std::vector<double> condexp(std::size_t k, std::span<const double> values) const override;
    std::vector<double> condexp_weighted(std::size_t k, std::span<const double> values,
                                         std::size_t coord) const override;
    bool rectangular() const override { return true; }
    std::string describe() const override;

    std::size_t basis_size() const;  // full basis count before node-wise drops

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Exact backward induction on a per-coordinate recombining binomial tree.
/// Requires a uniform grid, d <= 2 and N <= 24. Serves as the discrete
/// conditional-expectation oracle the regression backend is tested against.
class TreeBackend final : public CondExpBackend {
public:
    TreeBackend(const TimeGrid& grid, std::size_t dim);

    std::size_t count(std::size_t k) const override;
    std::size_t dim() const override { return dim_; }
    const TimeGrid& grid() const override { return grid_; }
    std::span<const double> state(std::size_t k, std::size_t i) const override;
    std::vector<double> condexp(std::size_t k, std::span<const double> values) const override;
    std::vector<double> condexp_weighted(std::size_t k, std::span<const double> values,
                                         std::size_t coord) const override;
    bool rectangular() const override { return false; }
    std::string describe() const override { return "tree"; }

private:
    TimeGrid grid_;
    std::size_t dim_ = 1;
    double sqdt_ = 0.0;
    std::vector<std::vector<double>> level_states_;  // per node k: count(k) x d
};

}  // namespace rbsde
