#include "rbsde/solution.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {

Vec SolutionEnsemble::k_cumulative(std::size_t k, std::size_t p) const {
    Vec acc(m, 0.0);
    for (std::size_t q = node_begin; q <= k; ++q) {
        if (q > node_begin) {
            const auto inc = kc_at(q - 1, p);
            for (std::size_t i = 0; i < m; ++i) acc[i] += inc[i];
        }
        if (has_atom(q)) {
            const auto a = atom_at(q, p);
            for (std::size_t i = 0; i < m; ++i) acc[i] += a[i];
        }
    }
    return acc;
}

double SolutionEnsemble::k_variation(std::size_t p) const {
    double v = 0.0;
    for (std::size_t q = node_begin; q <= node_end; ++q) {
        if (q < node_end) v += norm2(kc_at(q, p));
        if (has_atom(q)) v += norm2(atom_at(q, p));
    }
    return v;
}

double SolutionEnsemble::k_sup(std::size_t p) const {
    Vec acc(m, 0.0);
    double sup = 0.0;
    for (std::size_t q = node_begin; q <= node_end; ++q) {
        if (q > node_begin) {
            const auto inc = kc_at(q - 1, p);
            for (std::size_t i = 0; i < m; ++i) acc[i] += inc[i];
        }
        if (has_atom(q)) {
            const auto a = atom_at(q, p);
            for (std::size_t i = 0; i < m; ++i) acc[i] += a[i];
        }
        sup = std::max(sup, norm2(acc));
    }
    return sup;
}

double SolutionEnsemble::k_jump_sumsq(std::size_t p) const {
    double s = 0.0;
    for (std::size_t q = node_begin; q <= node_end; ++q)
        if (has_atom(q)) {
            const double n = norm2(atom_at(q, p));
            s += n * n;
        }
    return s;
}

SolutionDistance solution_distance(const SolutionEnsemble& a, const SolutionEnsemble& b) {
    if (a.grid.steps() != b.grid.steps() || a.m != b.m || a.d != b.d ||
        a.node_begin != b.node_begin || a.node_end != b.node_end)
        throw SolverError("solution_distance: mismatched grids");
    for (std::size_t k = a.node_begin; k <= a.node_end; ++k)
        if (a.counts[k] != b.counts[k])
            throw SolverError("solution_distance: mismatched ensembles");
    if (!a.rectangular()) throw SolverError("solution_distance: needs a rectangular ensemble");

    const std::size_t P = a.paths(), m = a.m;
    SolutionDistance out;
    for (std::size_t p = 0; p < P; ++p) {
        double ysup = 0.0, zint = 0.0, ksup = 0.0;
        Vec ka(m, 0.0), kb(m, 0.0), diff(m);
        for (std::size_t k = a.node_begin; k <= a.node_end; ++k) {
            const auto ya = a.y_at(k, p), yb = b.y_at(k, p);
            for (std::size_t i = 0; i < m; ++i) diff[i] = ya[i] - yb[i];
            ysup = std::max(ysup, norm2(diff));
            if (k > a.node_begin) {
                const auto ia = a.kc_at(k - 1, p), ib = b.kc_at(k - 1, p);
                for (std::size_t i = 0; i < m; ++i) {
                    ka[i] += ia[i];
                    kb[i] += ib[i];
                }
            }
            if (a.has_atom(k)) {
                const auto atom = a.atom_at(k, p);
                for (std::size_t i = 0; i < m; ++i) ka[i] += atom[i];
            }
            if (b.has_atom(k)) {
                const auto atom = b.atom_at(k, p);
                for (std::size_t i = 0; i < m; ++i) kb[i] += atom[i];
            }
            for (std::size_t i = 0; i < m; ++i) diff[i] = ka[i] - kb[i];
            ksup = std::max(ksup, norm2(diff));
            if (k < a.node_end) {
                const auto za = a.z_at(k, p), zb = b.z_at(k, p);
                double n2 = 0.0;
                for (std::size_t i = 0; i < za.size(); ++i) {
                    const double t = za[i] - zb[i];
                    n2 += t * t;
                }
                zint += n2 * a.grid.dt(k);
            }
        }
        out.dy += std::min(ysup, 1.0);
        out.dz += std::min(zint, 1.0);
        out.dk += std::min(ksup, 1.0);
    }
    out.dy /= double(P);
    out.dz /= double(P);
    out.dk /= double(P);
    return out;
}

}  // namespace rbsde
