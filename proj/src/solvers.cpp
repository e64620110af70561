#include "rbsde/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>

#include "rbsde/parallel.hpp"

namespace rbsde::solver {

namespace {

using geom::ConvexSet;

class Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

SolutionEnsemble make_solution(const SolveContext& ctx, const char* scheme, double parameter) {
    const CondExpBackend& be = *ctx.backend;
    SolutionEnsemble s;
    s.grid = be.grid();
    s.m = ctx.m;
    s.d = be.dim();
    s.node_begin = 0;
    s.node_end = be.grid().steps();
    const std::size_t N = s.node_end;
    s.counts.resize(N + 1);
    s.y.resize(N + 1);
    s.y_pre.resize(N + 1);
    s.kd_atom.resize(N + 1);
    s.z.resize(N);
    s.f_term.resize(N);
    s.kc_inc.resize(N);
    for (std::size_t k = 0; k <= N; ++k) s.counts[k] = be.count(k);
    s.scheme = scheme;
    s.parameter = parameter;
    return s;
}

// Y_N = xi(W_T) per state; optional containment precondition vs D_T.
void fill_terminal(const SolveContext& ctx, SolutionEnsemble& s) {
    const CondExpBackend& be = *ctx.backend;
    const std::size_t N = s.node_end, m = ctx.m, cnt = be.count(N);
    s.y[N].resize(cnt * m);
    parallel_for(cnt, [&](std::size_t i) {
        ctx.terminal->xi(be.state(N, i), std::span<double>(s.y[N].data() + i * m, m));
    });
    if (ctx.terminal->requires_containment) {
        double worst = 0.0;
        std::size_t worst_i = 0;
        for (std::size_t i = 0; i < cnt; ++i) {
            const ConvexSet dT = ctx.region->snapshot(ctx.region->horizon, be.state(N, i));
            const double dist = dT.distance(s.y_at(N, i));
            if (dist > worst) {
                worst = dist;
                worst_i = i;
            }
        }
        if (worst > 1e-8)
            throw ScenarioError("H1", "terminal value leaves D_T by " + std::to_string(worst) +
                                          " (state " + std::to_string(worst_i) + ")");
    }
}

// Conditional step from node k+1 to k: C = E_k[Y_eff], Z = E_k[Y_eff dW]/dt,
// f evaluated at (t_k, C, Z). Writes z[k], f_term[k]; returns yhat = C+f*dt.
std::vector<double> backward_step(const SolveContext& ctx, SolutionEnsemble& s, std::size_t k) {
    const CondExpBackend& be = *ctx.backend;
    const std::size_t m = ctx.m, dd = be.dim();
    const std::size_t cnt = be.count(k), cnt_next = be.count(k + 1);
    const double dt = s.grid.dt(k);
    const std::vector<double>& ynext = s.y_pre[k + 1].empty() ? s.y[k + 1] : s.y_pre[k + 1];

    std::vector<double> cond(cnt * m);
    s.z[k].assign(cnt * m * dd, 0.0);
    s.f_term[k].assign(cnt * m, 0.0);

    std::vector<double> col(cnt_next);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t q = 0; q < cnt_next; ++q) col[q] = ynext[q * m + i];
        const std::vector<double> ci = be.condexp(k, col);
        for (std::size_t q = 0; q < cnt; ++q) cond[q * m + i] = ci[q];
        for (std::size_t c = 0; c < dd; ++c) {
            const std::vector<double> zi = be.condexp_weighted(k, col, c);
            for (std::size_t q = 0; q < cnt; ++q) s.z[k][(q * m + i) * dd + c] = zi[q] / dt;
        }
    }
    if (!ctx.driver->zero) {
        const double t = s.grid.time(k);
        parallel_for(cnt, [&](std::size_t q) {
            ctx.driver->eval(t, std::span<const double>(cond.data() + q * m, m),
                             std::span<const double>(s.z[k].data() + q * m * dd, m * dd),
                             std::span<double>(s.f_term[k].data() + q * m, m));
        });
    }
    std::vector<double> yhat = std::move(cond);
    for (std::size_t q = 0; q < cnt * m; ++q) yhat[q] += dt * s.f_term[k][q];
    return yhat;
}

using SetOf = std::function<const ConvexSet&(std::size_t state)>;

// Projected segment sweep on nodes [from, to): Y_k = proj(yhat_k), increment
// into the continuous bucket. Terminal at `to` must already be in place.
void run_projected_segment(const SolveContext& ctx, SolutionEnsemble& s, std::size_t from,
                           std::size_t to, const SetOf& set_of, double& containment_max) {
    const std::size_t m = ctx.m;
    for (std::size_t k = to; k-- > from;) {
        std::vector<double> yhat = backward_step(ctx, s, k);
        const std::size_t cnt = s.counts[k];
        s.y[k].resize(cnt * m);
        s.kc_inc[k].assign(cnt * m, 0.0);
        std::vector<double> dists(cnt, 0.0);
        parallel_for(cnt, [&](std::size_t q) {
            const ConvexSet& g = set_of(q);
            g.project_to(std::span<const double>(yhat.data() + q * m, m),
                         std::span<double>(s.y[k].data() + q * m, m));
            for (std::size_t i = 0; i < m; ++i)
                s.kc_inc[k][q * m + i] = s.y[k][q * m + i] - yhat[q * m + i];
            dists[q] = g.distance(std::span<const double>(s.y[k].data() + q * m, m));
        });
        for (double v : dists) containment_max = std::max(containment_max, v);
    }
}

// Applies a projection atom at `node`: y_pre = proj(y), atom = y_pre - y.
// Returns the max projection displacement; atoms below 1e-14 everywhere are
// dropped so untouched nodes stay atom-free.
double apply_atom(const SolveContext& ctx, SolutionEnsemble& s, std::size_t node,
                  const SetOf& set_of) {
    const std::size_t m = ctx.m, cnt = s.counts[node];
    std::vector<double> pre(cnt * m), atom(cnt * m);
    std::vector<double> disp(cnt, 0.0);
    parallel_for(cnt, [&](std::size_t q) {
        const ConvexSet& g = set_of(q);
        g.project_to(std::span<const double>(s.y[node].data() + q * m, m),
                     std::span<double>(pre.data() + q * m, m));
        double d2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            atom[q * m + i] = pre[q * m + i] - s.y[node][q * m + i];
            d2 += atom[q * m + i] * atom[q * m + i];
        }
        disp[q] = std::sqrt(d2);
    });
    const double worst = *std::max_element(disp.begin(), disp.end());
    if (worst > 1e-14) {
        s.y_pre[node] = std::move(pre);
        s.kd_atom[node] = std::move(atom);
    }
    return worst;
}

void finish_report(const SolveContext& ctx, const SolutionEnsemble& s, SolverReport& rep,
                   const Timer& timer) {
    rep.backend = ctx.backend->describe();
    rep.grid_steps = s.grid.steps();
    rep.states = s.counts[0];
    if (s.rectangular()) {
        double mean = 0.0, mx = 0.0;
        const std::size_t P = s.paths();
        for (std::size_t p = 0; p < P; ++p) {
            const double v = s.k_variation(p);
            mean += v;
            mx = std::max(mx, v);
        }
        rep.k_variation_mean = mean / double(P);
        rep.k_variation_max = mx;
    }
    rep.wall_ms = timer.ms();
}

// Frozen sets of one segment: one shared set for deterministic regions,
// per-state sets (measurable at the freeze node) for adapted ones.
struct FrozenSegment {
    std::vector<ConvexSet> sets;  // one entry, or one per state
    bool shared = true;

    static FrozenSegment freeze(const SolveContext& ctx, double t, std::size_t node) {
        FrozenSegment f;
        const CondExpBackend& be = *ctx.backend;
        if (!ctx.region->state_dependent) {
            f.sets.push_back(ctx.region->snapshot(t));
            return f;
        }
        if (!be.rectangular())
            throw SolverError("adapted regions need a rectangular (path) backend");
        f.shared = false;
        const std::size_t cnt = be.count(node);
        f.sets.reserve(cnt);
        for (std::size_t q = 0; q < cnt; ++q)
            f.sets.push_back(ctx.region->snapshot(t, be.state(node, q)));
        return f;
    }

    SetOf view() const {
        if (shared)
            return [this](std::size_t) -> const ConvexSet& { return sets[0]; };
        return [this](std::size_t q) -> const ConvexSet& { return sets[q]; };
    }
};

}  // namespace

SolveOutput solve_fixed_domain(const SolveContext& ctx) {
    if (!ctx.region->jump_times.empty() || ctx.region->state_dependent ||
        ctx.region->rho_lipschitz != 0.0)
        throw SolverError("solve_fixed_domain needs a constant deterministic region");
    Timer timer;
    SolveOutput out{make_solution(ctx, "fixed", 0.0), {}};
    out.report.scheme = "fixed";
    fill_terminal(ctx, out.sol);
    const ConvexSet G = ctx.region->snapshot(0.0);
    const SetOf set_of = [&G](std::size_t) -> const ConvexSet& { return G; };
    run_projected_segment(ctx, out.sol, 0, out.sol.node_end, set_of,
                          out.report.containment_max);
    finish_report(ctx, out.sol, out.report, timer);
    return out;
}

SolveOutput solve_local(const SolveContext& ctx, const ConvexSet& frozen, std::size_t node_from,
                        std::size_t node_to, std::span<const double> zeta) {
    const CondExpBackend& be = *ctx.backend;
    if (node_to > be.grid().steps() || node_from > node_to)
        throw SolverError("solve_local: empty or invalid node range");
    const std::size_t m = ctx.m, cnt = be.count(node_to);
    if (zeta.size() != cnt * m) throw SolverError("solve_local: terminal size mismatch");
    for (std::size_t q = 0; q < cnt; ++q)
        if (frozen.distance(zeta.subspan(q * m, m)) > 1e-8)
            throw ScenarioError("H1", "local terminal leaves the frozen set");
    if (!(frozen.boundary_distance(frozen.slater()) > 0.0))
        throw ScenarioError("H4", "frozen set has no interior witness");

    Timer timer;
    SolveOutput out{make_solution(ctx, "local", 0.0), {}};
    out.report.scheme = "local";
    out.sol.node_begin = node_from;
    out.sol.node_end = node_to;
    out.sol.y[node_to].assign(zeta.begin(), zeta.end());
    const SetOf set_of = [&frozen](std::size_t) -> const ConvexSet& { return frozen; };
    run_projected_segment(ctx, out.sol, node_from, node_to, set_of,
                          out.report.containment_max);
    finish_report(ctx, out.sol, out.report, timer);
    return out;
}

SolveOutput solve_piecewise(const SolveContext& ctx, const region::DiscretizedRegion& disc) {
    const CondExpBackend& be = *ctx.backend;
    const TimeGrid& grid = be.grid();
    for (double t : disc.times)
        if (!grid.has_node(t)) throw SolverError("piecewise: grid must contain segment times");

    Timer timer;
    SolveOutput out{make_solution(ctx, "piecewise", double(disc.segments())), {}};
    out.report.scheme = "piecewise";
    out.report.parameter = double(disc.segments());
    fill_terminal(ctx, out.sol);

    const std::size_t segs = disc.segments();
    for (std::size_t seg = segs; seg-- > 0;) {
        const std::size_t a = grid.index_of(disc.times[seg]);
        const std::size_t b = grid.index_of(disc.times[seg + 1]);
        const FrozenSegment frozen = FrozenSegment::freeze(ctx, disc.times[seg], a);
        if (seg + 1 == segs) {
            // terminal atom: xi generally lies in D_T, not in the last
            // frozen set; Y_T stays xi and the gap becomes a K jump at T
            out.report.terminal_projection_max =
                apply_atom(ctx, out.sol, b, frozen.view());
        }
        run_projected_segment(ctx, out.sol, a, b, frozen.view(), out.report.containment_max);
        if (seg > 0) {
            const std::size_t a_prev = grid.index_of(disc.times[seg - 1]);
            const FrozenSegment left = FrozenSegment::freeze(ctx, disc.times[seg - 1], a_prev);
            apply_atom(ctx, out.sol, a, left.view());
        }
    }
    finish_report(ctx, out.sol, out.report, timer);
    return out;
}

SolveOutput solve_penalized(const SolveContext& ctx, std::size_t n) {
    const CondExpBackend& be = *ctx.backend;
    const TimeGrid& grid = be.grid();
    if (ctx.region->state_dependent && !ctx.region->jump_times.empty())
        throw SolverError("penalized: adapted regions with declared jumps are unsupported");
    const std::vector<double> jumps = region::penalization_jump_times(*ctx.region, n);
    std::vector<std::size_t> jump_nodes;
    for (double t : jumps) {
        if (!grid.has_node(t)) throw SolverError("penalized: grid must contain jump times");
        jump_nodes.push_back(grid.index_of(t));
    }

    Timer timer;
    SolveOutput out{make_solution(ctx, "penalized", double(n)), {}};
    out.report.scheme = "penalized";
    out.report.parameter = double(n);
    fill_terminal(ctx, out.sol);

    const std::size_t N = grid.steps(), m = ctx.m;
    std::size_t iter_max = 0;
    for (std::size_t k = N; k-- > 0;) {
        if (std::find(jump_nodes.begin(), jump_nodes.end(), k + 1) != jump_nodes.end()) {
            const double t = grid.time(k + 1);
            const ConvexSet pre_set = ctx.region->left_limit(t);
            const SetOf set_of = [&pre_set](std::size_t) -> const ConvexSet& { return pre_set; };
            apply_atom(ctx, out.sol, k + 1, set_of);
        }
        std::vector<double> yhat = backward_step(ctx, out.sol, k);
        const std::size_t cnt = be.count(k);
        const double t = grid.time(k), dt = grid.dt(k);
        const double ndt = double(n) * dt;
        out.sol.y[k].resize(cnt * m);
        out.sol.kc_inc[k].assign(cnt * m, 0.0);

        const bool adapted = ctx.region->state_dependent;
        const ConvexSet shared = ctx.region->snapshot(t, be.state(k, 0));
        std::vector<double> dists(cnt, 0.0);
        std::vector<std::size_t> iters(cnt, 0);
        parallel_for(cnt, [&](std::size_t q) {
            std::optional<ConvexSet> local;
            if (adapted && q > 0) local = ctx.region->snapshot(t, be.state(k, q));
            const ConvexSet& D = local ? *local : shared;
            double ybuf[geom::kMaxDim], pbuf[geom::kMaxDim];
            const double* yh = yhat.data() + q * m;
            for (std::size_t i = 0; i < m; ++i) ybuf[i] = yh[i];
            std::span<double> yv(ybuf, m), pv(pbuf, m);
            std::size_t it = 0;
            for (;; ++it) {
                if (it >= ctx.penalty_max_iter)
                    throw SolverError("penalized: contraction did not reach tolerance");
                D.project_to(yv, pv);
                double delta = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double ny = (yh[i] + ndt * pbuf[i]) / (1.0 + ndt);
                    delta = std::max(delta, std::fabs(ny - ybuf[i]));
                    ybuf[i] = ny;
                }
                if (delta < ctx.penalty_tol) break;
            }
            iters[q] = it + 1;
            D.project_to(yv, pv);
            double d2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                out.sol.y[k][q * m + i] = ybuf[i];
                out.sol.kc_inc[k][q * m + i] = -ndt * (ybuf[i] - pbuf[i]);
                const double t2 = ybuf[i] - pbuf[i];
                d2 += t2 * t2;
            }
            dists[q] = std::sqrt(d2);
        });
        for (std::size_t q = 0; q < cnt; ++q) {
            out.report.containment_max = std::max(out.report.containment_max, dists[q]);
            iter_max = std::max(iter_max, iters[q]);
        }
    }
    out.report.penalty_iter_max = iter_max;
    finish_report(ctx, out.sol, out.report, timer);
    return out;
}

SweepResult convergence_sweep(
    const SolveContext& ctx, SchemeKind kind, std::span<const std::size_t> parameters,
    const std::function<void(std::size_t, const SolveOutput&)>& per_run) {
    if (!std::is_sorted(parameters.begin(), parameters.end()))
        throw SolverError("convergence_sweep: parameters must be sorted ascending");
    SweepResult res;
    SolveOutput prev;
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        const std::size_t param = parameters[i];
        res.parameters.push_back(double(param));
        SolveOutput cur;
        if (kind == SchemeKind::penalized) {
            cur = solve_penalized(ctx, param);
        } else {
            const auto disc = region::discretize(*ctx.region, param);
            cur = solve_piecewise(ctx, disc);
            cur.sol.parameter = double(param);
            cur.report.parameter = double(param);
        }
        if (per_run) per_run(param, cur);
        res.reports.push_back(cur.report);
        if (i > 0) {
            SweepStep st;
            st.param_lo = res.parameters[i - 1];
            st.param_hi = res.parameters[i];
            st.dist = solution_distance(prev.sol, cur.sol);
            res.steps.push_back(st);
        }
        prev = std::move(cur);
    }
    res.final_run = std::move(prev);
    for (std::size_t i = 0; i + 1 < res.steps.size(); ++i)
        if (!(res.steps[i + 1].dist.dy < res.steps[i].dist.dy)) res.decreasing_y = false;
    return res;
}

}  // namespace rbsde::solver
