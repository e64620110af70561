#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rbsde/errors.hpp"

namespace rbsde {

/// Node times 0 = t_0 < ... < t_N = T. Built from a uniform base mesh with
/// extra required times (region jumps, segment boundaries) inserted as exact
/// nodes, so the max step never exceeds T/steps.
class TimeGrid {
public:
    TimeGrid() = default;

    static TimeGrid build(double horizon, std::size_t steps,
                          std::span<const double> required = {}) {
        if (!(horizon > 0.0) || steps == 0) throw EngineError("bad time grid request");
        std::vector<double> t;
        t.reserve(steps + 1 + required.size());
        for (std::size_t k = 0; k <= steps; ++k)
            t.push_back(horizon * double(k) / double(steps));
        for (double r : required) {
            if (r < -1e-12 || r > horizon + 1e-12)
                throw EngineError("required grid time outside [0, T]");
            t.push_back(std::clamp(r, 0.0, horizon));
        }
        std::sort(t.begin(), t.end());
        std::vector<double> nodes;
        nodes.reserve(t.size());
        for (double v : t)
            if (nodes.empty() || v - nodes.back() > 1e-12) nodes.push_back(v);
        nodes.back() = horizon;
        TimeGrid g;
        g.nodes_ = std::move(nodes);
        return g;
    }

    double horizon() const { return nodes_.back(); }
    std::size_t steps() const { return nodes_.size() - 1; }  // N
    double time(std::size_t k) const { return nodes_[k]; }
    double dt(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
    std::span<const double> nodes() const { return nodes_; }

    double max_dt() const {
        double m = 0.0;
        for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) m = std::max(m, dt(k));
        return m;
    }

    bool uniform(double tol = 1e-12) const {
        const double h = nodes_[1] - nodes_[0];
        for (std::size_t k = 0; k + 1 < nodes_.size(); ++k)
            if (std::fabs(dt(k) - h) > tol) return false;
        return true;
    }

    /// Index of an exact node at time t, or throws.
    std::size_t index_of(double t, double tol = 1e-9) const {
        const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - tol);
        if (it == nodes_.end() || std::fabs(*it - t) > tol)
            throw EngineError("time is not a grid node");
        return std::size_t(it - nodes_.begin());
    }

    bool has_node(double t, double tol = 1e-9) const {
        const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - tol);
        return it != nodes_.end() && std::fabs(*it - t) <= tol;
    }

private:
    std::vector<double> nodes_;
};

}  // namespace rbsde
