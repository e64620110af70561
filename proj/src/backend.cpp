#include "rbsde/backend.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "rbsde/parallel.hpp"

namespace rbsde {

namespace {

// exponent tuples with total degree <= degree over n variables
std::vector<std::vector<unsigned>> monomials(std::size_t n, std::size_t degree) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> cur(n, 0);
    const std::function<void(std::size_t, unsigned)> rec = [&](std::size_t pos, unsigned left) {
        if (pos == n) {
            out.push_back(cur);
            return;
        }
        for (unsigned e = 0; e <= left; ++e) {
            cur[pos] = e;
            rec(pos + 1, left - e);
        }
        cur[pos] = 0;
    };
    rec(0, unsigned(degree));
    return out;
}

}  // namespace

struct RegressionBackend::Impl {
    const BrownianEnsemble& ens;
    std::size_t degree;
    FeatureHook hook;
    std::size_t n_features;   // d + extras
    std::size_t full_basis;   // basis size with every feature alive

    struct NodeCache {
        std::vector<std::size_t> kept;             // features with positive variance
        std::vector<double> mean, inv_sd;          // per kept feature
        std::vector<std::vector<unsigned>> exps;   // basis exponents over kept features
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;  // of the normal matrix
    };
    mutable std::vector<std::optional<NodeCache>> cache;
    mutable std::mutex cache_mutex;

    Impl(const BrownianEnsemble& e, std::size_t deg, FeatureHook h)
        : ens(e), degree(deg), hook(std::move(h)) {
        n_features = ens.dim() + hook.extra;
        full_basis = monomials(n_features, degree).size();
        if (ens.paths() < 10 * full_basis)
            throw EngineError("regression needs at least 10 paths per basis function (" +
                              std::to_string(full_basis) + " functions)");
        cache.resize(ens.grid().steps() + 1);
    }

    void raw_features(std::size_t k, std::size_t p, std::span<double> out) const {
        const auto w = ens.value(p, k);
        for (std::size_t c = 0; c < ens.dim(); ++c) out[c] = w[c];
        if (hook.extra) hook.fill(k, p, out.subspan(ens.dim(), hook.extra));
    }

    void basis_row(const NodeCache& nc, std::size_t k, std::size_t p,
                   std::span<double> row) const {
        double raw[32];
        raw_features(k, p, std::span<double>(raw, n_features));
        double z[32];
        for (std::size_t f = 0; f < nc.kept.size(); ++f)
            z[f] = (raw[nc.kept[f]] - nc.mean[f]) * nc.inv_sd[f];
        for (std::size_t b = 0; b < nc.exps.size(); ++b) {
            double v = 1.0;
            for (std::size_t f = 0; f < nc.kept.size(); ++f)
                for (unsigned e = 0; e < nc.exps[b][f]; ++e) v *= z[f];
            row[b] = v;
        }
    }

    const NodeCache& node(std::size_t k) const {
        {
            std::lock_guard lock(cache_mutex);
            if (cache[k]) return *cache[k];
        }
        NodeCache nc;
        const std::size_t P = ens.paths();
        // feature moments, assembled over a fixed chunk layout
        std::vector<double> sum(n_features, 0.0), sumsq(n_features, 0.0);
        {
            std::vector<double> psum(64 * n_features, 0.0), psumsq(64 * n_features, 0.0);
            parallel_chunks(P, [&](std::size_t c, std::size_t b, std::size_t e) {
                double raw[32];
                for (std::size_t p = b; p < e; ++p) {
                    raw_features(k, p, std::span<double>(raw, n_features));
                    for (std::size_t f = 0; f < n_features; ++f) {
                        psum[c * n_features + f] += raw[f];
                        psumsq[c * n_features + f] += raw[f] * raw[f];
                    }
                }
            });
            for (std::size_t c = 0; c < 64; ++c)
                for (std::size_t f = 0; f < n_features; ++f) {
                    sum[f] += psum[c * n_features + f];
                    sumsq[f] += psumsq[c * n_features + f];
                }
        }
        for (std::size_t f = 0; f < n_features; ++f) {
            const double mean = sum[f] / double(P);
            const double var = std::max(0.0, sumsq[f] / double(P) - mean * mean);
            if (var > 1e-24) {
                nc.kept.push_back(f);
                nc.mean.push_back(mean);
                nc.inv_sd.push_back(1.0 / std::sqrt(var));
            }
        }
        nc.exps = monomials(nc.kept.size(), degree);
        const std::size_t B = nc.exps.size();

        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Eigen::Index(B), Eigen::Index(B));
        {
            std::vector<Eigen::MatrixXd> partial(64, G);
            parallel_chunks(P, [&](std::size_t c, std::size_t b, std::size_t e) {
                std::vector<double> row(B);
                for (std::size_t p = b; p < e; ++p) {
                    basis_row(nc, k, p, row);
                    for (std::size_t i = 0; i < B; ++i)
                        for (std::size_t j = i; j < B; ++j)
                            partial[c](Eigen::Index(i), Eigen::Index(j)) += row[i] * row[j];
                }
            });
            for (const auto& part : partial) G += part;
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < i; ++j)
                    G(Eigen::Index(i), Eigen::Index(j)) = G(Eigen::Index(j), Eigen::Index(i));
        }
        nc.qr.compute(G);
        if (std::size_t(nc.qr.rank()) < B)
            throw EngineError("regression basis is rank deficient at node " + std::to_string(k) +
                              " (basis too rich for the path count)");
        std::lock_guard lock(cache_mutex);
        if (!cache[k]) cache[k] = std::move(nc);
        return *cache[k];
    }

    std::vector<double> fit(std::size_t k, std::span<const double> target) const {
        const std::size_t P = ens.paths();
        const NodeCache& nc = node(k);
        const std::size_t B = nc.exps.size();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(B));
        {
            std::vector<Eigen::VectorXd> partial(64, rhs);
            parallel_chunks(P, [&](std::size_t c, std::size_t b, std::size_t e) {
                std::vector<double> row(B);
                for (std::size_t p = b; p < e; ++p) {
                    basis_row(nc, k, p, row);
                    for (std::size_t i = 0; i < B; ++i)
                        partial[c](Eigen::Index(i)) += row[i] * target[p];
                }
            });
            for (const auto& part : partial) rhs += part;
        }
        const Eigen::VectorXd coef = nc.qr.solve(rhs);
        std::vector<double> fitted(P);
        parallel_for(P, [&](std::size_t p) {
            std::vector<double> row(B);
            basis_row(nc, k, p, row);
            double v = 0.0;
            for (std::size_t i = 0; i < B; ++i) v += row[i] * coef(Eigen::Index(i));
            fitted[p] = v;
        });
        return fitted;
    }
};

RegressionBackend::RegressionBackend(const BrownianEnsemble& ensemble, std::size_t degree,
                                     FeatureHook hook)
    : impl_(std::make_unique<Impl>(ensemble, degree, std::move(hook))) {}

RegressionBackend::~RegressionBackend() = default;

std::size_t RegressionBackend::count(std::size_t) const { return impl_->ens.paths(); }
std::size_t RegressionBackend::dim() const { return impl_->ens.dim(); }
const TimeGrid& RegressionBackend::grid() const { return impl_->ens.grid(); }
std::size_t RegressionBackend::basis_size() const { return impl_->full_basis; }

std::span<const double> RegressionBackend::state(std::size_t k, std::size_t i) const {
    return impl_->ens.value(i, k);
}

std::vector<double> RegressionBackend::condexp(std::size_t k,
                                               std::span<const double> values) const {
    if (values.size() != impl_->ens.paths()) throw EngineError("condexp: value count mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw EngineError("condexp: non-finite values");
    return impl_->fit(k, values);
}

std::vector<double> RegressionBackend::condexp_weighted(std::size_t k,
                                                        std::span<const double> values,
                                                        std::size_t coord) const {
    if (values.size() != impl_->ens.paths()) throw EngineError("condexp: value count mismatch");
    if (coord >= impl_->ens.dim()) throw EngineError("condexp_weighted: bad coordinate");
    std::vector<double> target(values.size());
    for (std::size_t p = 0; p < values.size(); ++p) {
        if (!std::isfinite(values[p])) throw EngineError("condexp: non-finite values");
        target[p] = values[p] * impl_->ens.increment(p, k)[coord];
    }
    return impl_->fit(k, target);
}

std::string RegressionBackend::describe() const {
    return "regression(degree=" + std::to_string(impl_->degree) +
           (impl_->hook.extra ? ",region-features" : "") + ")";
}

// --- tree ------------------------------------------------------------------

TreeBackend::TreeBackend(const TimeGrid& grid, std::size_t dim) : grid_(grid), dim_(dim) {
    if (dim_ < 1 || dim_ > 2) throw EngineError("tree backend supports d <= 2");
    if (grid_.steps() > 24) throw EngineError("tree backend supports N <= 24");
    if (!grid_.uniform(1e-12)) throw EngineError("tree backend needs a uniform grid");
    sqdt_ = std::sqrt(grid_.dt(0));
    level_states_.resize(grid_.steps() + 1);
    for (std::size_t k = 0; k <= grid_.steps(); ++k) {
        const std::size_t n1 = k + 1;
        const std::size_t cnt = dim_ == 1 ? n1 : n1 * n1;
        level_states_[k].resize(cnt * dim_);
        for (std::size_t i = 0; i < cnt; ++i) {
            const std::size_t j0 = dim_ == 1 ? i : i / n1;
            const std::size_t j1 = dim_ == 1 ? 0 : i % n1;
            level_states_[k][i * dim_ + 0] = (2.0 * double(j0) - double(k)) * sqdt_;
            if (dim_ == 2) level_states_[k][i * dim_ + 1] = (2.0 * double(j1) - double(k)) * sqdt_;
        }
    }
}

std::size_t TreeBackend::count(std::size_t k) const {
    const std::size_t n1 = k + 1;
    return dim_ == 1 ? n1 : n1 * n1;
}

std::span<const double> TreeBackend::state(std::size_t k, std::size_t i) const {
    return {level_states_[k].data() + i * dim_, dim_};
}

std::vector<double> TreeBackend::condexp(std::size_t k, std::span<const double> values) const {
    if (values.size() != count(k + 1)) throw EngineError("condexp: value count mismatch");
    std::vector<double> out(count(k));
    if (dim_ == 1) {
        for (std::size_t j = 0; j <= k; ++j) out[j] = 0.5 * (values[j] + values[j + 1]);
    } else {
        const std::size_t n1 = k + 2;
        for (std::size_t a = 0; a <= k; ++a)
            for (std::size_t b = 0; b <= k; ++b)
                out[a * (k + 1) + b] = 0.25 * (values[a * n1 + b] + values[(a + 1) * n1 + b] +
                                               values[a * n1 + b + 1] + values[(a + 1) * n1 + b + 1]);
    }
    return out;
}

std::vector<double> TreeBackend::condexp_weighted(std::size_t k, std::span<const double> values,
                                                  std::size_t coord) const {
    if (values.size() != count(k + 1)) throw EngineError("condexp: value count mismatch");
    if (coord >= dim_) throw EngineError("condexp_weighted: bad coordinate");
    std::vector<double> out(count(k));
    if (dim_ == 1) {
        for (std::size_t j = 0; j <= k; ++j)
            out[j] = 0.5 * (-sqdt_ * values[j] + sqdt_ * values[j + 1]);
    } else {
        const std::size_t n1 = k + 2;
        for (std::size_t a = 0; a <= k; ++a)
            for (std::size_t b = 0; b <= k; ++b) {
                const double v00 = values[a * n1 + b], v10 = values[(a + 1) * n1 + b];
                const double v01 = values[a * n1 + b + 1], v11 = values[(a + 1) * n1 + b + 1];
                out[a * (k + 1) + b] =
                    coord == 0 ? 0.25 * sqdt_ * (v10 + v11 - v00 - v01)
                               : 0.25 * sqdt_ * (v01 + v11 - v00 - v10);
            }
    }
    return out;
}

}  // namespace rbsde
