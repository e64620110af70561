#include "rbsde/verification.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "rbsde/random.hpp"

namespace rbsde::verify {

namespace {

using geom::ConvexSet;

struct Worst {
    double value = -std::numeric_limits<double>::infinity();
    std::int64_t path = -1;
    double time = -1.0;

    void offer(double v, std::size_t p, double t) {
        if (v > value) {
            value = v;
            path = std::int64_t(p);
            time = t;
        }
    }
};

}  // namespace

DiagnosticReport check_containment(const SolutionEnsemble& sol, const region::RegionPath& path,
                                   const CondExpBackend& backend, double threshold,
                                   const region::DiscretizedRegion* disc) {
    DiagnosticReport rep;
    rep.name = "containment";
    rep.threshold = threshold;
    Worst worst, truth_gap;
    for (std::size_t k = sol.node_begin; k <= sol.node_end; ++k) {
        const double t = sol.grid.time(k);
        const double ft = disc ? disc->times[disc->segment_of(t)] : t;
        const std::size_t fk = disc ? sol.grid.index_of(ft) : k;
        const ConvexSet shared_true = path.snapshot(t, backend.state(k, 0));
        const ConvexSet shared_frozen =
            disc ? path.snapshot(ft, backend.state(fk, 0)) : shared_true;
        for (std::size_t q = 0; q < sol.counts[k]; ++q) {
            std::optional<ConvexSet> local_true, local_frozen;
            if (path.state_dependent && q > 0) {
                local_true = path.snapshot(t, backend.state(k, q));
                if (disc) local_frozen = path.snapshot(ft, backend.state(fk, q));
            }
            const ConvexSet& dtrue = local_true ? *local_true : shared_true;
            const ConvexSet& dfro = local_frozen ? *local_frozen : shared_frozen;
            const double dv = dtrue.distance(sol.y_at(k, q));
            if (disc) {
                worst.offer(dfro.distance(sol.y_at(k, q)), q, t);
                truth_gap.offer(dv, q, t);
            } else {
                worst.offer(dv, q, t);
            }
        }
    }
    rep.statistic = std::max(0.0, worst.value);
    rep.worst_path = worst.path;
    rep.worst_time = worst.time;
    if (disc) rep.extras["true_region_gap"] = std::max(0.0, truth_gap.value);
    rep.pass = rep.statistic <= threshold;
    return rep;
}

DiagnosticReport check_skorokhod(const SolutionEnsemble& sol, const region::RegionPath& path,
                                 const CondExpBackend& backend, std::size_t processes,
                                 std::uint64_t seed, double tol_scale) {
    DiagnosticReport rep;
    rep.name = "skorokhod";
    if (!sol.rectangular())
        throw Error("check_skorokhod needs a rectangular (path) ensemble");
    const std::size_t P = sol.paths(), m = sol.m;
    const CounterRng rng(seed);
    const double R = path.bound_radius > 0.0 ? path.bound_radius : 1.0;

    // test process value at (k, state q), and its left limit at atom nodes
    const auto x_value = [&](std::size_t j, std::size_t k, std::size_t q, bool left) -> Vec {
        const double t = sol.grid.time(k);
        const auto st = backend.state(k, q);
        const ConvexSet d = left ? path.left_limit(t, st) : path.snapshot(t, st);
        if (j == 0) {
            Vec a = left ? path.witness_left(t, st) : path.witness(t, st);
            if (!d.contains(a, 1e-8)) throw Error("skorokhod: witness test process inadmissible");
            return a;
        }
        Vec c(m);
        if (j <= (processes + 1) / 2) {
            for (std::size_t i = 0; i < m; ++i)
                c[i] = R * (2.0 * rng.uniform(j, i) - 1.0);
        } else {
            const auto yv = left ? sol.y_left_at(k, q) : sol.y_at(k, q);
            for (std::size_t i = 0; i < m; ++i)
                c[i] = yv[i] + 0.5 * R * (2.0 * rng.uniform(j * 1024 + q, i) - 1.0);
        }
        Vec x = d.project(c);
        if (!d.contains(x, 1e-8)) throw Error("skorokhod: projected test process inadmissible");
        return x;
    };

    Worst worst_raw;
    Worst worst_excess;
    for (std::size_t j = 0; j < processes; ++j) {
        for (std::size_t p = 0; p < P; ++p) {
            double s = 0.0;
            for (std::size_t k = sol.node_begin; k <= sol.node_end; ++k) {
                if (k < sol.node_end) {
                    const Vec x = x_value(j, k, p, false);
                    const auto yv = sol.y_at(k, p);
                    const auto inc = sol.kc_at(k, p);
                    for (std::size_t i = 0; i < m; ++i) s += (yv[i] - x[i]) * inc[i];
                }
                if (sol.has_atom(k)) {
                    const Vec x = x_value(j, k, p, true);
                    const auto yv = sol.y_left_at(k, p);
                    const auto a = sol.atom_at(k, p);
                    for (std::size_t i = 0; i < m; ++i) s += (yv[i] - x[i]) * a[i];
                }
            }
            const double thr = tol_scale * (1.0 + sol.k_variation(p));
            worst_raw.offer(s, p, double(j));
            worst_excess.offer(s - thr, p, double(j));
        }
    }
    rep.statistic = worst_raw.value;
    rep.threshold = tol_scale;  // per-path scale; excess carries the verdict
    rep.extras["worst_excess"] = worst_excess.value;
    rep.extras["processes"] = double(processes);
    rep.worst_path = worst_excess.path;
    rep.worst_time = worst_excess.time;  // test-process index, not a time
    rep.note = "threshold is tol*(1+|K|_T) per path; worst_time column holds the process index";
    rep.pass = worst_excess.value <= 0.0;
    return rep;
}

DiagnosticReport check_jump_projection(const SolutionEnsemble& sol,
                                       const region::RegionPath& path,
                                       const CondExpBackend& backend) {
    DiagnosticReport rep;
    rep.name = "jump_projection";
    rep.threshold = 1e-10;
    if (path.jump_times.empty()) {
        rep.pass = true;
        rep.note = "no declared jumps";
        return rep;
    }
    std::vector<std::size_t> nodes;
    if (sol.scheme == "penalized") {
        for (double t :
             region::penalization_jump_times(path, std::size_t(sol.parameter)))
            nodes.push_back(sol.grid.index_of(t));
    } else {
        for (double t : path.jump_times)
            if (sol.grid.has_node(t) && sol.has_atom(sol.grid.index_of(t)))
                nodes.push_back(sol.grid.index_of(t));
    }
    Worst worst;
    worst.value = 0.0;
    for (std::size_t k : nodes) {
        const double t = sol.grid.time(k);
        for (std::size_t q = 0; q < sol.counts[k]; ++q) {
            const ConvexSet pre = path.left_limit(t, backend.state(k, q));
            const auto yv = sol.y_at(k, q);
            const Vec proj = pre.project(yv);
            const auto yl = sol.y_left_at(k, q);
            double e1 = 0.0, e2 = 0.0;
            for (std::size_t i = 0; i < sol.m; ++i) {
                const double atom = sol.has_atom(k) ? sol.atom_at(k, q)[i] : 0.0;
                e1 = std::max(e1, std::fabs(atom - (proj[i] - yv[i])));
                e2 = std::max(e2, std::fabs(atom + (yv[i] - yl[i])));
            }
            worst.offer(std::max(e1, e2), q, t);
        }
    }
    rep.statistic = std::max(0.0, worst.value);
    rep.worst_path = worst.path;
    rep.worst_time = worst.time;
    rep.pass = rep.statistic <= rep.threshold;
    if (nodes.empty()) rep.note = "no projection nodes for this run";
    return rep;
}

DiagnosticReport check_apriori(const SolutionEnsemble& sol, const region::RegionPath& path,
                               const CondExpBackend& backend, const DriverSpec& driver,
                               double witness_h2) {
    DiagnosticReport rep;
    rep.name = "apriori";
    if (!sol.rectangular()) throw Error("check_apriori needs a rectangular ensemble");
    const std::size_t P = sol.paths(), m = sol.m;
    double ysup2 = 0.0, zint = 0.0, jumps2 = 0.0, ksup2 = 0.0, kdist = 0.0, xi2 = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        double ys = 0.0, zi = 0.0, kd = 0.0;
        for (std::size_t k = sol.node_begin; k <= sol.node_end; ++k) {
            ys = std::max(ys, norm2(sol.y_at(k, p)));
            if (!sol.y_pre[k].empty()) ys = std::max(ys, norm2(sol.y_left_at(k, p)));
            const double t = sol.grid.time(k);
            if (k < sol.node_end) {
                double zn = 0.0;
                const auto zv = sol.z_at(k, p);
                for (double v : zv) zn += v * v;
                zi += zn * sol.grid.dt(k);
                const auto st = backend.state(k, p);
                const ConvexSet d = path.snapshot(t, st);
                const Vec a = path.witness(t, st);
                kd += d.boundary_distance(a) * norm2(sol.kc_at(k, p));
            }
            if (sol.has_atom(k)) {
                const auto st = backend.state(k, p);
                const ConvexSet dpre = path.left_limit(t, st);
                const Vec apre = path.witness_left(t, st);
                kd += dpre.boundary_distance(apre) * norm2(sol.atom_at(k, p));
            }
        }
        ysup2 += ys * ys;
        zint += zi;
        jumps2 += sol.k_jump_sumsq(p);
        const double ks = sol.k_sup(p);
        ksup2 += ks * ks;
        kdist += kd;
        const double xn = norm2(sol.y_at(sol.node_end, p));
        xi2 += xn * xn;
    }
    const double inv = 1.0 / double(P);
    rep.extras["y_sup_sq"] = ysup2 * inv;
    rep.extras["z_l2"] = zint * inv;
    rep.extras["k_jumps_sq"] = jumps2 * inv;
    rep.extras["k_sup_sq"] = ksup2 * inv;
    rep.extras["k_margin_mass"] = kdist * inv;
    const double lhs =
        (ysup2 + zint + jumps2 + ksup2 + kdist) * inv;
    const double rhs = xi2 * inv +
                       driver_zero_l2(driver, sol.grid, m, backend.dim()) +
                       witness_h2 * witness_h2;
    rep.extras["lhs_total"] = lhs;
    rep.extras["rhs_total"] = rhs;
    rep.statistic = rhs > 0.0 ? lhs / rhs : lhs;
    rep.threshold = std::numeric_limits<double>::infinity();
    rep.pass = std::isfinite(lhs) && std::isfinite(rhs);
    rep.note = "statistic is the LHS/RHS energy ratio; pass = all terms finite";
    return rep;
}

DiagnosticReport compare_apriori(const DiagnosticReport& full, const DiagnosticReport& half,
                                 double tolerance) {
    DiagnosticReport rep;
    rep.name = "apriori_stability";
    const double a = full.statistic, b = half.statistic;
    rep.statistic = (a > 0.0 && b > 0.0) ? std::fabs(a / b - 1.0) : std::fabs(a - b);
    rep.threshold = tolerance;
    rep.extras["ratio_full"] = a;
    rep.extras["ratio_half"] = b;
    rep.pass = full.pass && half.pass && rep.statistic <= tolerance;
    rep.note = "ratio drift under halving the path count";
    return rep;
}

DiagnosticReport check_stability(const SolutionEnsemble& sol, const SolutionEnsemble& other,
                                 const region::RegionPath& path, const CondExpBackend& backend,
                                 double p_exp) {
    DiagnosticReport rep;
    rep.name = "stability";
    if (!(p_exp > 1.0 && p_exp <= 2.0)) throw Error("check_stability: p must be in (1, 2]");
    if (sol.grid.steps() != other.grid.steps() || sol.paths() != other.paths() ||
        sol.m != other.m)
        throw Error("check_stability: mismatched ensembles");
    const std::size_t P = sol.paths(), m = sol.m;
    double esup = 0.0, ezbar = 0.0, ejump = 0.0, exi = 0.0, cross = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        double ys = 0.0, zi = 0.0, jd = 0.0, cr = 0.0;
        Vec diff(m);
        for (std::size_t k = sol.node_begin; k <= sol.node_end; ++k) {
            const auto ya = sol.y_at(k, p), yb = other.y_at(k, p);
            for (std::size_t i = 0; i < m; ++i) diff[i] = ya[i] - yb[i];
            const double dn = norm2(diff);
            ys = std::max(ys, dn);
            if (k < sol.node_end) {
                const auto za = sol.z_at(k, p), zb = other.z_at(k, p);
                double zn = 0.0;
                for (std::size_t i = 0; i < za.size(); ++i) {
                    const double t = za[i] - zb[i];
                    zn += t * t;
                }
                if (dn > 0.0) zi += std::pow(dn, p_exp - 2.0) * zn * sol.grid.dt(k);
                // composite-projection integrand (report only): how far the
                // other solution sits outside this solution's region
                const ConvexSet d = path.snapshot(sol.grid.time(k), backend.state(k, p));
                cr += d.distance(yb) * norm2(sol.kc_at(k, p));
            }
            const bool ja = sol.has_atom(k), jb = other.has_atom(k);
            if (ja || jb) {
                double a2 = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double da = ja ? sol.atom_at(k, p)[i] : 0.0;
                    const double db = jb ? other.atom_at(k, p)[i] : 0.0;
                    a2 += (da - db) * (da - db);
                }
                jd += a2;
            }
        }
        esup += std::pow(ys, p_exp);
        ezbar += zi;
        ejump += jd;
        cross += cr;
        Vec xid(m);
        const auto xa = sol.y_at(sol.node_end, p), xb = other.y_at(sol.node_end, p);
        for (std::size_t i = 0; i < m; ++i) xid[i] = xa[i] - xb[i];
        exi += std::pow(norm2(xid), p_exp);
    }
    const double inv = 1.0 / double(P);
    rep.extras["e_sup_p"] = esup * inv;
    rep.extras["e_zbar"] = ezbar * inv;
    rep.extras["e_jump_sq"] = ejump * inv;  // I_T at p = 2
    rep.extras["e_xi_p"] = exi * inv;
    rep.extras["composite_cross"] = cross * inv;
    rep.statistic = exi > 0.0 ? esup / exi : 0.0;
    rep.threshold = std::numeric_limits<double>::infinity();
    rep.pass = std::isfinite(rep.statistic);
    rep.note = "statistic is E sup|Ybar|^p / E|xibar|^p; thresholds applied by sweeps";
    return rep;
}

DiagnosticReport check_inward_inequality(const SolutionEnsemble& sol,
                                         const region::RegionPath& path,
                                         const CondExpBackend& backend) {
    DiagnosticReport rep;
    rep.name = "inward_inequality";
    if (!sol.rectangular()) throw Error("check_inward_inequality needs a rectangular ensemble");
    const std::size_t P = sol.paths(), m = sol.m;
    Worst worst;
    for (std::size_t p = 0; p < P; ++p) {
        double lhs = 0.0, mass = 0.0;
        for (std::size_t k = sol.node_begin; k <= sol.node_end; ++k) {
            const double t = sol.grid.time(k);
            const auto st = backend.state(k, p);
            if (k < sol.node_end) {
                const ConvexSet d = path.snapshot(t, st);
                const Vec a = path.witness(t, st);
                const auto yv = sol.y_at(k, p);
                const auto inc = sol.kc_at(k, p);
                for (std::size_t i = 0; i < m; ++i) lhs += (yv[i] - a[i]) * inc[i];
                mass += d.boundary_distance(a) * norm2(inc);
            }
            if (sol.has_atom(k)) {
                const ConvexSet dpre = path.left_limit(t, st);
                const Vec apre = path.witness_left(t, st);
                const auto yl = sol.y_left_at(k, p);
                const auto atom = sol.atom_at(k, p);
                for (std::size_t i = 0; i < m; ++i) lhs += (yl[i] - apre[i]) * atom[i];
                mass += dpre.boundary_distance(apre) * norm2(atom);
            }
        }
        const double slack = 1e-6 * (1.0 + sol.k_variation(p));
        worst.offer(lhs + mass - slack, p, 0.0);
    }
    rep.statistic = worst.value;
    rep.threshold = 0.0;
    rep.worst_path = worst.path;
    rep.pass = rep.statistic <= 0.0;
    rep.note = "sum <Y_- - A_-, dK> + sum dist(A_-,bd) d|K| <= 1e-6 (1+|K|_T) per path";
    return rep;
}

DiagnosticReport check_equation_residual(const SolutionEnsemble& sol,
                                         const CondExpBackend& backend) {
    DiagnosticReport rep;
    rep.name = "equation_residual";
    if (!sol.rectangular()) throw Error("check_equation_residual needs a rectangular ensemble");
    const std::size_t P = sol.paths(), m = sol.m, d = sol.d;
    Worst worst;
    for (std::size_t k = sol.node_begin; k < sol.node_end; ++k) {
        const double dt = sol.grid.dt(k);
        Vec mean(m, 0.0), meansq(m, 0.0);
        for (std::size_t p = 0; p < P; ++p) {
            const auto y0 = sol.y_at(k, p);
            const auto y1 = sol.y_left_at(k + 1, p);  // post-atom effective value
            const auto zv = sol.z_at(k, p);
            const auto fv = std::span<const double>(sol.f_term[k].data() + p * m, m);
            const auto kcv = sol.kc_at(k, p);
            const auto w0 = backend.state(k, p);
            const auto w1 = backend.state(k + 1, p);
            for (std::size_t i = 0; i < m; ++i) {
                double zdw = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    zdw += zv[i * d + c] * (w1[c] - w0[c]);
                const double r = y0[i] - (y1[i] + fv[i] * dt - zdw + kcv[i]);
                mean[i] += r;
                meansq[i] += r * r;
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double mu = mean[i] / double(P);
            const double var = std::max(0.0, meansq[i] / double(P) - mu * mu);
            const double se = std::sqrt(var / double(P)) + 1e-300;
            worst.offer(std::fabs(mu) / se, i, sol.grid.time(k));
        }
    }
    rep.statistic = std::max(0.0, worst.value);
    rep.threshold = 5.0;  // 3-SE-per-node intent with family-wise slack over all nodes
    rep.worst_time = worst.time;
    rep.pass = rep.statistic <= rep.threshold;
    rep.note = "worst per-node residual mean in standard errors";
    return rep;
}

}  // namespace rbsde::verify
