#include "rbsde/region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rbsde::region {

namespace {
const Vec kNoState;
}

ConvexSet RegionPath::snapshot(double t, std::span<const double> state) const {
    if (t < -1e-12 || t > horizon + 1e-12) throw RegionError("snapshot: time outside [0, T]");
    return snapshot_rule(std::clamp(t, 0.0, horizon), state);
}

ConvexSet RegionPath::left_limit(double t, std::span<const double> state) const {
    if (t <= 1e-12 || t > horizon + 1e-12) throw RegionError("left_limit: time outside (0, T]");
    t = std::min(t, horizon);
    if (is_jump_time(t) && left_rule) return left_rule(t, state);
    return snapshot_rule(t, state);
}

Vec RegionPath::witness(double t, std::span<const double> state) const {
    return witness_rule(std::clamp(t, 0.0, horizon), state);
}

Vec RegionPath::witness_left(double t, std::span<const double> state) const {
    t = std::min(t, horizon);
    if (is_jump_time(t) && witness_left_rule) return witness_left_rule(t, state);
    return witness_rule(t, state);
}

bool RegionPath::is_jump_time(double t, double tol) const {
    for (double j : jump_times)
        if (std::fabs(j - t) <= tol) return true;
    return false;
}

std::size_t DiscretizedRegion::segment_of(double t) const {
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
        throw RegionError("segment_of: time outside [0, T]");
    // half-open segments; T belongs to the last one
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    std::size_t i = std::size_t(it - times.begin());
    if (i == 0) return 0;
    --i;
    return std::min(i, times.size() - 2);
}

std::vector<double> penalization_jump_times(const RegionPath& path, std::size_t n,
                                            std::span<const double> state,
                                            std::size_t directions) {
    if (n < 1) throw RegionError("penalization_jump_times: n >= 1 required");
    std::vector<double> out;
    const double threshold = 1.0 / double(n);
    for (double t : path.jump_times) {
        const ConvexSet post = path.snapshot(t, state);
        const ConvexSet pre = path.left_limit(t, state);
        double rho;
        if (path.bound_radius > double(n)) {
            const Vec hint = path.witness(t, state);
            rho = geom::hausdorff_capped(post, pre, double(n), directions, hint);
        } else {
            rho = geom::hausdorff(post, pre, directions);
        }
        if (rho > threshold) out.push_back(t);
    }
    return out;
}

DiscretizedRegion discretize(const RegionPath& path, std::size_t j,
                             const std::function<double(std::size_t)>& segment_pick) {
    if (j < 1) throw RegionError("discretize: j >= 1 required");
    // sizes of the declared jumps, evaluated once (deterministic rules)
    std::vector<double> jump_size(path.jump_times.size());
    for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
        const double t = path.jump_times[i];
        jump_size[i] = geom::hausdorff(path.snapshot(t), path.left_limit(t), 256);
    }
    DiscretizedRegion disc;
    disc.times.push_back(0.0);
    const double T = path.horizon;
    std::size_t i = 1;
    while (disc.times.back() < T - 1e-12) {
        const double prev = disc.times.back();
        double a = segment_pick ? segment_pick(i - 1) : 1.0 / double(j);
        if (a < 1.0 / double(j) - 1e-12 || a > 2.0 / double(j) + 1e-12)
            throw RegionError("discretize: segment pick outside [1/j, 2/j]");
        double next = prev + a;
        for (std::size_t q = 0; q < path.jump_times.size(); ++q)
            if (path.jump_times[q] > prev + 1e-12 && jump_size[q] > 1.0 / double(j))
                next = std::min(next, path.jump_times[q]);
        next = std::min(next, T);
        disc.times.push_back(next);
        ++i;
        if (i > 100000) throw RegionError("discretize: too many segments");
    }
    disc.times.back() = T;
    return disc;
}

double uniform_gap(const RegionPath& path, const DiscretizedRegion& disc, const TimeGrid& grid,
                   std::span<const double> state, std::size_t directions) {
    if (std::fabs(grid.horizon() - path.horizon) > 1e-9)
        throw RegionError("uniform_gap: grid horizon mismatch");
    for (double s : disc.times)
        if (!grid.has_node(s)) throw RegionError("uniform_gap: grid must contain segment times");
    std::vector<ConvexSet> frozen;
    frozen.reserve(disc.segments());
    for (std::size_t s = 0; s < disc.segments(); ++s)
        frozen.push_back(path.snapshot(disc.times[s], state));
    double gap = 0.0;
    for (double t : grid.nodes()) {
        const ConvexSet truth = path.snapshot(t, state);
        gap = std::max(gap, geom::hausdorff(frozen[disc.segment_of(t)], truth, directions));
    }
    return gap;
}

H4Report validate_h4(const RegionPath& path, const TimeGrid& grid,
                     const BrownianEnsemble* ensemble, std::size_t sample_paths,
                     std::size_t directions) {
    H4Report rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    const std::size_t P =
        path.state_dependent && ensemble ? std::min<std::size_t>(ensemble->paths(), sample_paths)
                                         : 1;
    if (path.state_dependent && !ensemble)
        throw RegionError("validate_h4: adapted region needs an ensemble");

    const auto state_at = [&](std::size_t p, std::size_t k) -> std::span<const double> {
        if (!ensemble) return kNoState;
        return ensemble->value(p, k);
    };

    const std::size_t N = grid.steps();
    for (std::size_t p = 0; p < P && rep.what.empty(); ++p) {
        for (std::size_t k = 0; k <= N; ++k) {
            const double t = grid.time(k);
            const auto st = state_at(p, k);
            const ConvexSet d = path.snapshot(t, st);
            const Vec a = path.witness(t, st);
            if (!d.contains(a, 1e-10)) {
                rep.what = "witness leaves the region";
                rep.first_violation_time = t;
                rep.first_violation_path = std::int64_t(p);
                break;
            }
            const double bd = d.boundary_distance(a);
            rep.min_margin = std::min(rep.min_margin, bd);
            if (bd < path.margin * (1.0 - 1e-6)) {
                rep.what = "witness margin below the declared value";
                rep.first_violation_time = t;
                rep.first_violation_path = std::int64_t(p);
                break;
            }
        }
    }

    // D_T = D_{T-}
    if (rep.what.empty()) {
        const auto stT = state_at(0, N);
        rep.terminal_rho =
            geom::hausdorff(path.snapshot(path.horizon, stT), path.left_limit(path.horizon, stT),
                            std::max<std::size_t>(directions, 64));
        if (rep.terminal_rho > 1e-8) {
            rep.what = "region value at T differs from its left limit";
            rep.first_violation_time = path.horizon;
            rep.first_violation_path = 0;
        }
    }

    // cadlag between declared jumps: inter-node rho against the declared modulus
    if (rep.what.empty()) {
        for (std::size_t p = 0; p < P && rep.what.empty(); ++p) {
            for (std::size_t k = 0; k < N; ++k) {
                const double t0 = grid.time(k), t1 = grid.time(k + 1);
                bool straddles = false;
                for (double jt : path.jump_times)
                    if (jt > t0 + 1e-12 && jt <= t1 + 1e-12) straddles = true;
                if (straddles) continue;
                const double rho = geom::hausdorff(path.snapshot(t0, state_at(p, k)),
                                                   path.snapshot(t1, state_at(p, k + 1)),
                                                   std::max<std::size_t>(directions, 64));
                double allowance = path.rho_lipschitz * (t1 - t0) * 1.5 + 1e-9;
                if (path.state_dependent && ensemble) {
                    double dstate = dist2(ensemble->value(p, k + 1), ensemble->value(p, k));
                    allowance += path.state_lipschitz * dstate * 1.5;
                }
                rep.max_continuity_rho = std::max(rep.max_continuity_rho, rho);
                if (rho > allowance) {
                    rep.what = "snapshot rule discontinuous between declared jumps";
                    rep.first_violation_time = t1;
                    rep.first_violation_path = std::int64_t(p);
                    break;
                }
            }
        }
    }

    // witness H^2 proxy on the sampled paths
    {
        const std::size_t nodes = N + 1, m = path.dim;
        std::vector<double> mart(P * nodes * m, 0.0), drift(P * nodes * m, 0.0);
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t k = 0; k < nodes; ++k) {
                const double t = grid.time(k);
                const auto st = state_at(p, k);
                const Vec a = path.witness(t, st);
                const Vec mk = path.witness_mart_rule ? path.witness_mart_rule(t, st) : Vec(m, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    mart[(p * nodes + k) * m + i] = mk[i];
                    drift[(p * nodes + k) * m + i] = a[i] - mk[i];
                }
            }
        }
        rep.h2_estimate = h2_norm_estimate(mart, drift, P, nodes, m);
    }

    rep.pass = rep.what.empty();
    return rep;
}

// --- families -------------------------------------------------------------

RegionPath make_constant_region(ConvexSet set, std::optional<Vec> witness, double margin) {
    RegionPath rp;
    rp.dim = set.dim();
    Vec w = witness.value_or(set.slater());
    rp.bound_radius = set.bounded() ? set.bounding_radius() : 0.0;
    rp.snapshot_rule = [set](double, std::span<const double>) { return set; };
    rp.witness_rule = [w](double, std::span<const double>) { return w; };
    rp.margin = margin;
    rp.rho_lipschitz = 0.0;
    return rp;
}

RegionPath make_moving_box(Vec halfwidth, Vec amplitude, double freq, Vec phase, double margin) {
    const std::size_t m = halfwidth.size();
    if (amplitude.size() != m || phase.size() != m)
        throw RegionError("moving box: parameter size mismatch");
    for (double h : halfwidth)
        if (!(h > 0.0)) throw RegionError("moving box: halfwidth must be positive");
    auto center = [=](double t) {
        Vec c(m);
        for (std::size_t i = 0; i < m; ++i)
            c[i] = amplitude[i] * std::sin(std::numbers::pi * (freq * t + phase[i]));
        return c;
    };
    RegionPath rp;
    rp.dim = m;
    rp.snapshot_rule = [=](double t, std::span<const double>) {
        const Vec c = center(t);
        geom::Box b{Vec(m), Vec(m)};
        for (std::size_t i = 0; i < m; ++i) {
            b.lower[i] = c[i] - halfwidth[i];
            b.upper[i] = c[i] + halfwidth[i];
        }
        return ConvexSet(std::move(b));
    };
    rp.witness_rule = [=](double t, std::span<const double>) { return center(t); };
    rp.margin = margin;
    rp.rho_lipschitz = std::numbers::pi * std::fabs(freq) * norm2(amplitude);
    double r2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = std::fabs(amplitude[i]) + halfwidth[i];
        r2 += e * e;
    }
    rp.bound_radius = std::sqrt(r2);
    return rp;
}

RegionPath make_breathing_ball(Vec center, double r0, double amp, double freq, double margin) {
    if (!(r0 - std::fabs(amp) > 0.0)) throw RegionError("breathing ball: radius can vanish");
    RegionPath rp;
    rp.dim = center.size();
    rp.snapshot_rule = [=](double t, std::span<const double>) {
        return ConvexSet(geom::Ball{center, r0 + amp * std::sin(std::numbers::pi * freq * t)});
    };
    rp.witness_rule = [=](double, std::span<const double>) { return center; };
    rp.margin = margin;
    rp.rho_lipschitz = std::numbers::pi * std::fabs(freq * amp);
    rp.bound_radius = norm2(center) + r0 + std::fabs(amp);
    return rp;
}

RegionPath make_rotating_polytope(std::vector<geom::Halfspace> faces, double omega,
                                  double margin) {
    if (faces.empty()) throw RegionError("rotating polytope: no faces");
    const std::size_t m = faces[0].normal.size();
    if (m != 2) throw RegionError("rotating polytope: only m = 2 supported");
    RegionPath rp;
    rp.dim = 2;
    rp.snapshot_rule = [=](double t, std::span<const double>) {
        const double c = std::cos(omega * t), s = std::sin(omega * t);
        geom::Polytope p;
        p.faces.reserve(faces.size());
        for (const auto& f : faces) {
            geom::Halfspace h = f;
            h.normal = {c * f.normal[0] - s * f.normal[1], s * f.normal[0] + c * f.normal[1]};
            p.faces.push_back(std::move(h));
        }
        return ConvexSet(std::move(p), Vec(2, 0.0));
    };
    rp.witness_rule = [](double, std::span<const double>) { return Vec(2, 0.0); };
    rp.margin = margin;
    // rotation moves every point of B(0,R) by at most R * |dtheta|
    geom::Polytope base{faces};
    const ConvexSet base_set(std::move(base), Vec(2, 0.0));
    rp.bound_radius = base_set.bounding_radius();
    rp.rho_lipschitz = std::fabs(omega) * rp.bound_radius;
    return rp;
}

RegionPath make_piecewise_region(std::vector<double> jump_times, std::vector<ConvexSet> pieces,
                                 std::vector<Vec> witnesses, double margin) {
    if (pieces.size() != jump_times.size() + 1)
        throw RegionError("piecewise region: need one more piece than jump times");
    if (!std::is_sorted(jump_times.begin(), jump_times.end()))
        throw RegionError("piecewise region: jump times must be sorted");
    if (witnesses.empty())
        for (const auto& p : pieces) witnesses.push_back(p.slater());
    if (witnesses.size() != pieces.size())
        throw RegionError("piecewise region: witness count mismatch");

    auto piece_at = [jump_times](double t) {
        std::size_t i = 0;
        while (i < jump_times.size() && t >= jump_times[i] - 1e-12) ++i;
        return i;  // right-continuous
    };
    auto piece_before = [jump_times, piece_at](double t) {
        const std::size_t i = piece_at(t);
        // at a declared jump the left limit is the previous piece
        for (double jt : jump_times)
            if (std::fabs(jt - t) <= 1e-12 && i > 0) return i - 1;
        return i;
    };

    RegionPath rp;
    rp.dim = pieces[0].dim();
    rp.jump_times = jump_times;
    rp.snapshot_rule = [pieces, piece_at](double t, std::span<const double>) {
        return pieces[piece_at(t)];
    };
    rp.left_rule = [pieces, piece_before](double t, std::span<const double>) {
        return pieces[piece_before(t)];
    };
    rp.witness_rule = [witnesses, piece_at](double t, std::span<const double>) {
        return witnesses[piece_at(t)];
    };
    rp.witness_left_rule = [witnesses, piece_before](double t, std::span<const double>) {
        return witnesses[piece_before(t)];
    };
    rp.margin = margin;
    rp.rho_lipschitz = 0.0;
    for (const auto& p : pieces)
        rp.bound_radius = std::max(rp.bound_radius, p.bounded() ? p.bounding_radius() : 0.0);
    return rp;
}

RegionPath make_witness_translated(ConvexSet base, std::optional<Vec> base_witness, double beta,
                                   double margin, double state_radius_allowance) {
    const std::size_t m = base.dim();
    Vec w0 = base_witness.value_or(base.slater());
    RegionPath rp;
    rp.dim = m;
    rp.state_dependent = true;
    auto shift_of = [beta, m](std::span<const double> state) {
        Vec s(m, 0.0);
        for (std::size_t i = 0; i < m && i < state.size(); ++i) s[i] = beta * state[i];
        return s;
    };
    rp.snapshot_rule = [base, shift_of](double, std::span<const double> state) {
        return geom::translated(base, shift_of(state));
    };
    rp.witness_rule = [w0, shift_of](double, std::span<const double> state) {
        Vec s = shift_of(state);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += w0[i];
        return s;
    };
    rp.witness_mart_rule = [shift_of](double, std::span<const double> state) {
        return shift_of(state);
    };
    rp.margin = margin;
    rp.rho_lipschitz = 0.0;
    rp.state_lipschitz = std::fabs(beta);
    rp.bound_radius =
        (base.bounded() ? base.bounding_radius() : 0.0) + std::fabs(beta) * state_radius_allowance;
    return rp;
}

}  // namespace rbsde::region
