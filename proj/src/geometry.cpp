#include "rbsde/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "rbsde/random.hpp"

namespace rbsde::geom {

namespace {

constexpr double kFeasTol = 1e-13;
constexpr double kMoveTol = 1e-13;
constexpr int kMaxCycles = 10000;

void require_dim(std::size_t m) {
    if (m == 0 || m > kMaxDim) throw GeometryError("dimension out of range");
}

double polytope_violation(const std::vector<Halfspace>& faces, std::span<const double> x) {
    double v = 0.0;
    for (const auto& f : faces) v = std::max(v, dot(f.normal, x) - f.offset);
    return v;
}

// Dykstra over the halfspaces of a polytope. Scratch buffers are
// thread_local; calls never nest (halfspace projections are closed-form).
void polytope_project(const std::vector<Halfspace>& faces, std::span<const double> x,
                      std::span<double> out) {
    const std::size_t m = x.size();
    if (polytope_violation(faces, x) <= 0.0) {
        std::copy(x.begin(), x.end(), out.begin());
        return;
    }
    thread_local std::vector<double> corr, y, w;
    corr.assign(faces.size() * m, 0.0);
    y.assign(x.begin(), x.end());
    w.resize(m);
    for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
        double move = 0.0;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            double* e = corr.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) w[j] = y[j] + e[j];
            const double v = dot(faces[i].normal, w) - faces[i].offset;
            if (v > 0.0) {
                for (std::size_t j = 0; j < m; ++j) {
                    const double ny = w[j] - v * faces[i].normal[j];
                    e[j] = w[j] - ny;
                    move = std::max(move, std::fabs(ny - y[j]));
                    y[j] = ny;
                }
            } else {
                for (std::size_t j = 0; j < m; ++j) {
                    e[j] = 0.0;
                    move = std::max(move, std::fabs(w[j] - y[j]));
                    y[j] = w[j];
                }
            }
        }
        if (move < kMoveTol && polytope_violation(faces, y) < 5e-13) break;
        if (cycle == kMaxCycles - 1 && polytope_violation(faces, y) > 1e-10)
            throw GeometryError("polytope projection did not converge (degenerate face set?)");
    }
    // final cyclic sweeps drive residual violations to machine level
    for (int s = 0; s < 3; ++s) {
        for (const auto& f : faces) {
            const double v = dot(f.normal, y) - f.offset;
            if (v > 0.0)
                for (std::size_t j = 0; j < m; ++j) y[j] -= v * f.normal[j];
        }
    }
    std::copy(y.begin(), y.end(), out.begin());
}

// Dykstra over arbitrary member sets (recursion-safe: local buffers).
void members_project(const std::vector<ConvexSet>& members, std::span<const double> x,
                     std::span<double> out) {
    const std::size_t m = x.size();
    bool inside = true;
    for (const auto& g : members)
        if (g.distance(x) > 0.0) {
            inside = false;
            break;
        }
    if (inside) {
        std::copy(x.begin(), x.end(), out.begin());
        return;
    }
    std::vector<double> corr(members.size() * m, 0.0);
    std::vector<double> y(x.begin(), x.end()), w(m), ny(m);
    for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
        double move = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            double* e = corr.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) w[j] = y[j] + e[j];
            members[i].project_to(w, ny);
            for (std::size_t j = 0; j < m; ++j) {
                e[j] = w[j] - ny[j];
                move = std::max(move, std::fabs(ny[j] - y[j]));
                y[j] = ny[j];
            }
        }
        double viol = 0.0;
        for (const auto& g : members) viol = std::max(viol, g.distance(y));
        if (move < kMoveTol && viol < 5e-13) break;
        if (cycle == kMaxCycles - 1 && viol > 1e-10)
            throw GeometryError("intersection projection did not converge (empty intersection?)");
    }
    std::copy(y.begin(), y.end(), out.begin());
}

bool solve_square(std::vector<double> A, std::vector<double> b, std::size_t m, Vec& x) {
    // Gaussian elimination with partial pivoting on an m-by-m system.
    std::array<std::size_t, kMaxDim> piv{};
    for (std::size_t i = 0; i < m; ++i) piv[i] = i;
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t best = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::fabs(A[piv[r] * m + c]) > std::fabs(A[piv[best] * m + c])) best = r;
        std::swap(piv[c], piv[best]);
        const double p = A[piv[c] * m + c];
        if (std::fabs(p) < 1e-10) return false;
        for (std::size_t r = c + 1; r < m; ++r) {
            const double f = A[piv[r] * m + c] / p;
            if (f == 0.0) continue;
            for (std::size_t j = c; j < m; ++j) A[piv[r] * m + j] -= f * A[piv[c] * m + j];
            b[piv[r]] -= f * b[piv[c]];
        }
    }
    x.assign(m, 0.0);
    for (std::size_t c = m; c-- > 0;) {
        double s = b[piv[c]];
        for (std::size_t j = c + 1; j < m; ++j) s -= A[piv[c] * m + j] * x[j];
        x[c] = s / A[piv[c] * m + c];
    }
    return true;
}

// Enumerates k-subsets of {0..n-1}; calls fn(indices) for each.
template <typename Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
    if (k == 0 || k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        fn(idx);
        std::size_t i = k;
        while (i-- > 0) {
            if (idx[i] != i + n - k) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
    }
}

// Is u in the cone spanned by the given normals? Checked by enumerating
// small subsets and solving the nonnegative least-squares fit directly.
bool in_normal_cone(const std::vector<Halfspace>& faces, const std::vector<std::size_t>& active,
                    std::span<const double> u, std::size_t m) {
    for (std::size_t k = 1; k <= std::min(m, active.size()); ++k) {
        bool found = false;
        for_each_subset(active.size(), k, [&](const std::vector<std::size_t>& sub) {
            if (found) return;
            std::vector<double> G(k * k), c(k);
            for (std::size_t i = 0; i < k; ++i) {
                const auto& ai = faces[active[sub[i]]].normal;
                c[i] = dot(ai, u);
                for (std::size_t j = 0; j < k; ++j)
                    G[i * k + j] = dot(ai, faces[active[sub[j]]].normal);
            }
            Vec lam;
            if (!solve_square(G, c, k, lam)) return;
            double resid2 = dot(u, u);
            for (std::size_t i = 0; i < k; ++i) {
                if (lam[i] < -1e-9) return;
                resid2 -= lam[i] * c[i];
            }
            if (resid2 < 1e-14) found = true;
        });
        if (found) return true;
    }
    return false;
}

struct VertexScan {
    bool any = false;
    double best = -std::numeric_limits<double>::infinity();
    Vec best_vertex;
    double max_abs = 0.0;
};

VertexScan scan_vertices(const Polytope& p, std::span<const double> u, std::size_t m) {
    VertexScan out;
    const std::size_t H = p.faces.size();
    if (H < m) return out;
    // guard against combinatorial blowup in high dimension
    double combos = 1.0;
    for (std::size_t i = 0; i < m; ++i) combos *= double(H - i) / double(i + 1);
    if (combos > 2e5) throw GeometryError("polytope too large for support enumeration");
    for_each_subset(H, m, [&](const std::vector<std::size_t>& sub) {
        std::vector<double> A(m * m), b(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) A[i * m + j] = p.faces[sub[i]].normal[j];
            b[i] = p.faces[sub[i]].offset;
        }
        Vec x;
        if (!solve_square(std::move(A), std::move(b), m, x)) return;
        if (polytope_violation(p.faces, x) > 1e-9) return;
        out.any = true;
        out.max_abs = std::max(out.max_abs, norm2(x));
        const double val = u.empty() ? 0.0 : dot(x, u);
        if (val > out.best) {
            out.best = val;
            out.best_vertex = x;
        }
    });
    return out;
}

double polytope_support(const Polytope& p, std::span<const double> u, std::size_t m) {
    const VertexScan scan = scan_vertices(p, u, m);
    if (!scan.any) throw GeometryError("support: polytope has no vertices (unbounded)");
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < p.faces.size(); ++i)
        if (p.faces[i].offset - dot(p.faces[i].normal, scan.best_vertex) <= 1e-8)
            active.push_back(i);
    if (!in_normal_cone(p.faces, active, u, m))
        throw GeometryError("support: polytope unbounded in requested direction");
    return scan.best;
}

// Projected support ascent: p <- proj(p + step*u) is monotone in <p,u> and
// its fixed points are support points. `proj` must map onto the target set.
template <typename Proj>
double support_ascent(Vec p, std::span<const double> u, double step, Proj&& proj) {
    Vec q(p.size());
    double val = dot(p, u);
    for (int it = 0; it < 200; ++it) {
        Vec w = p;
        axpy(step, u, w);
        proj(w, q);
        const double nv = dot(q, u);
        p = q;
        if (nv <= val + 1e-12 * (1.0 + std::fabs(nv))) return nv;
        val = nv;
    }
    return val;
}

}  // namespace

ConvexSet::ConvexSet(Ball b) : shape_(std::move(b)), dim_(std::get<Ball>(shape_).center.size()) {
    const auto& ball = std::get<Ball>(shape_);
    require_dim(dim_);
    if (!(ball.radius > 0.0)) throw GeometryError("ball radius must be positive");
    slater_ = ball.center;
    validate_slater();
}

ConvexSet::ConvexSet(Box b) : shape_(std::move(b)), dim_(std::get<Box>(shape_).lower.size()) {
    const auto& box = std::get<Box>(shape_);
    require_dim(dim_);
    if (box.upper.size() != dim_) throw GeometryError("box bound size mismatch");
    for (std::size_t i = 0; i < dim_; ++i)
        if (!(box.lower[i] < box.upper[i])) throw GeometryError("box requires lower < upper");
    slater_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) slater_[i] = 0.5 * (box.lower[i] + box.upper[i]);
    validate_slater();
}

ConvexSet::ConvexSet(Polytope p, Vec slater)
    : shape_(std::move(p)), slater_(std::move(slater)), dim_(slater_.size()) {
    require_dim(dim_);
    auto& poly = std::get<Polytope>(shape_);
    if (poly.faces.empty()) throw GeometryError("polytope needs at least one halfspace");
    for (auto& f : poly.faces) {
        if (f.normal.size() != dim_) throw GeometryError("halfspace dimension mismatch");
        const double n = norm2(f.normal);
        if (n < 1e-14) throw GeometryError("halfspace normal is zero");
        for (auto& v : f.normal) v /= n;
        f.offset /= n;
    }
    validate_slater();
}

ConvexSet::ConvexSet(Intersection i, Vec slater)
    : shape_(std::move(i)), slater_(std::move(slater)), dim_(slater_.size()) {
    require_dim(dim_);
    const auto& in = std::get<Intersection>(shape_);
    if (in.members.empty()) throw GeometryError("intersection needs at least one member");
    for (const auto& g : in.members)
        if (g.dim() != dim_) throw GeometryError("intersection member dimension mismatch");
    validate_slater();
}

void ConvexSet::validate_slater() const {
    if (slater_.size() != dim_) throw GeometryError("slater point dimension mismatch");
    if (distance(slater_) > 0.0) throw GeometryError("slater point lies outside the set");
    if (!(boundary_distance(slater_) > 1e-9))
        throw GeometryError("slater point has no interior margin");
}

void ConvexSet::project_to(std::span<const double> x, std::span<double> out) const {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ball>) {
                const double d = dist2(x, s.center);
                if (d <= s.radius) {
                    std::copy(x.begin(), x.end(), out.begin());
                } else {
                    const double f = s.radius / d;
                    for (std::size_t i = 0; i < dim_; ++i)
                        out[i] = s.center[i] + f * (x[i] - s.center[i]);
                }
            } else if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t i = 0; i < dim_; ++i)
                    out[i] = std::clamp(x[i], s.lower[i], s.upper[i]);
            } else if constexpr (std::is_same_v<T, Polytope>) {
                polytope_project(s.faces, x, out);
            } else {
                members_project(s.members, x, out);
            }
        },
        shape_);
}

Vec ConvexSet::project(std::span<const double> x) const {
    Vec out(dim_);
    project_to(x, out);
    return out;
}

double ConvexSet::distance(std::span<const double> x) const {
    std::array<double, kMaxDim> buf;
    project_to(x, std::span<double>(buf.data(), dim_));
    return dist2(x, std::span<const double>(buf.data(), dim_));
}

bool ConvexSet::contains(std::span<const double> x, double tol) const {
    return distance(x) <= tol;
}

double ConvexSet::boundary_distance(std::span<const double> a) const {
    if (distance(a) > 1e-12) throw GeometryError("boundary_distance: point outside the set");
    return std::max(0.0, std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return s.radius - dist2(a, s.center);
            } else if constexpr (std::is_same_v<T, Box>) {
                double d = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < dim_; ++i)
                    d = std::min({d, a[i] - s.lower[i], s.upper[i] - a[i]});
                return d;
            } else if constexpr (std::is_same_v<T, Polytope>) {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& f : s.faces) d = std::min(d, f.offset - dot(f.normal, a));
                return d;
            } else {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& g : s.members) d = std::min(d, g.boundary_distance(a));
                return d;
            }
        },
        shape_));
}

double ConvexSet::support(std::span<const double> u) const {
    if (std::fabs(norm2(u) - 1.0) > 1e-12) throw GeometryError("support: direction not unit");
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return dot(s.center, u) + s.radius;
            } else if constexpr (std::is_same_v<T, Box>) {
                double h = 0.0;
                for (std::size_t i = 0; i < dim_; ++i)
                    h += std::max(s.lower[i] * u[i], s.upper[i] * u[i]);
                return h;
            } else if constexpr (std::is_same_v<T, Polytope>) {
                return polytope_support(s, u, dim_);
            } else {
                double radius = std::numeric_limits<double>::infinity();
                for (const auto& g : s.members)
                    if (g.bounded()) radius = std::min(radius, g.bounding_radius());
                if (!std::isfinite(radius))
                    throw GeometryError("support: intersection has no bounded member");
                return support_ascent(slater_, u, 4.0 * radius + 1.0,
                                      [&](const Vec& w, Vec& q) { project_to(w, q); });
            }
        },
        shape_);
}

bool ConvexSet::bounded() const {
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ball> || std::is_same_v<T, Box>) {
                return true;
            } else if constexpr (std::is_same_v<T, Polytope>) {
                try {
                    const VertexScan scan = scan_vertices(s, {}, dim_);
                    if (!scan.any) return false;
                    Vec u(dim_, 0.0);
                    for (std::size_t i = 0; i < dim_; ++i) {
                        u[i] = 1.0;
                        polytope_support(s, u, dim_);
                        u[i] = -1.0;
                        polytope_support(s, u, dim_);
                        u[i] = 0.0;
                    }
                    return true;
                } catch (const GeometryError&) {
                    return false;
                }
            } else {
                for (const auto& g : s.members)
                    if (g.bounded()) return true;
                return false;
            }
        },
        shape_);
}

double ConvexSet::bounding_radius() const {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return norm2(s.center) + s.radius;
            } else if constexpr (std::is_same_v<T, Box>) {
                double r2 = 0.0;
                for (std::size_t i = 0; i < dim_; ++i)
                    r2 += std::max(s.lower[i] * s.lower[i], s.upper[i] * s.upper[i]);
                return std::sqrt(r2);
            } else if constexpr (std::is_same_v<T, Polytope>) {
                const VertexScan scan = scan_vertices(s, {}, dim_);
                if (!scan.any || !bounded())
                    throw GeometryError("bounding_radius: polytope unbounded");
                return scan.max_abs;
            } else {
                double r = std::numeric_limits<double>::infinity();
                for (const auto& g : s.members)
                    if (g.bounded()) r = std::min(r, g.bounding_radius());
                if (!std::isfinite(r))
                    throw GeometryError("bounding_radius: intersection unbounded");
                return r;
            }
        },
        shape_);
}

ConvexSet translated(const ConvexSet& g, std::span<const double> shift) {
    if (shift.size() != g.dim()) throw GeometryError("translated: shift dimension mismatch");
    Vec slater = g.slater();
    for (std::size_t i = 0; i < slater.size(); ++i) slater[i] += shift[i];
    return std::visit(
        [&](const auto& s) -> ConvexSet {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ball>) {
                Ball b = s;
                for (std::size_t i = 0; i < b.center.size(); ++i) b.center[i] += shift[i];
                return ConvexSet(std::move(b));
            } else if constexpr (std::is_same_v<T, Box>) {
                Box b = s;
                for (std::size_t i = 0; i < b.lower.size(); ++i) {
                    b.lower[i] += shift[i];
                    b.upper[i] += shift[i];
                }
                return ConvexSet(std::move(b));
            } else if constexpr (std::is_same_v<T, Polytope>) {
                Polytope p = s;
                for (auto& f : p.faces) f.offset += dot(f.normal, shift);
                return ConvexSet(std::move(p), std::move(slater));
            } else {
                Intersection in;
                in.members.reserve(s.members.size());
                for (const auto& mem : s.members) in.members.push_back(translated(mem, shift));
                return ConvexSet(std::move(in), std::move(slater));
            }
        },
        g.shape());
}

std::vector<Vec> direction_mesh(std::size_t m, std::size_t count) {
    require_dim(m);
    std::vector<Vec> dirs;
    if (m == 1) {
        dirs.push_back({1.0});
        dirs.push_back({-1.0});
        return dirs;
    }
    dirs.reserve(count);
    if (m == 2) {
        for (std::size_t k = 0; k < count; ++k) {
            const double th = 2.0 * std::numbers::pi * double(k) / double(count);
            dirs.push_back({std::cos(th), std::sin(th)});
        }
    } else if (m == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t k = 0; k < count; ++k) {
            const double z = 1.0 - 2.0 * (double(k) + 0.5) / double(count);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = golden * double(k);
            dirs.push_back({r * std::cos(th), r * std::sin(th), z});
        }
    } else {
        const CounterRng rng(0xD1255EEDULL);
        for (std::size_t k = 0; k < count; ++k) {
            Vec u(m);
            double n = 0.0;
            std::uint64_t salt = 0;
            do {
                for (std::size_t j = 0; j < m; ++j)
                    u[j] = rng.normal(k, (salt << 8) | j);
                n = norm2(u);
                ++salt;
            } while (n < 1e-6);
            for (auto& v : u) v /= n;
            dirs.push_back(std::move(u));
        }
    }
    return dirs;
}

double mesh_angle(std::size_t m, std::size_t count) {
    if (m == 1) return 0.0;
    if (m == 2) return std::numbers::pi / double(count);
    if (m == 3) return 2.4 / std::sqrt(double(count));
    return 3.0 / std::pow(double(count), 1.0 / double(m - 1));  // heuristic
}

HausdorffEstimate hausdorff_estimate(const ConvexSet& a, const ConvexSet& b,
                                     std::size_t directions) {
    if (a.dim() != b.dim()) throw GeometryError("hausdorff: dimension mismatch");
    if (directions < 16) throw GeometryError("hausdorff: need at least 16 directions");
    if (!a.bounded() || !b.bounded()) throw GeometryError("hausdorff: sets must be bounded");
    const auto dirs = direction_mesh(a.dim(), directions);
    double v = 0.0;
    for (const auto& u : dirs) v = std::max(v, std::fabs(a.support(u) - b.support(u)));
    const double diam = 2.0 * std::max(a.bounding_radius(), b.bounding_radius());
    return {v, diam * (1.0 - std::cos(mesh_angle(a.dim(), directions)))};
}

double hausdorff(const ConvexSet& a, const ConvexSet& b, std::size_t directions) {
    return hausdorff_estimate(a, b, directions).value;
}

double support_capped(const ConvexSet& g, double cap, std::span<const double> u,
                      std::span<const double> hint) {
    if (std::fabs(norm2(u) - 1.0) > 1e-12) throw GeometryError("support: direction not unit");
    const std::size_t m = g.dim();
    const Ball capball{Vec(m, 0.0), cap};
    const auto proj = [&](std::span<const double> x, std::span<double> out) {
        // Dykstra over {g, B(0,cap)}
        std::vector<double> e(2 * m, 0.0), y(x.begin(), x.end()), w(m), ny(m);
        for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
            double move = 0.0;
            for (int i = 0; i < 2; ++i) {
                double* ei = e.data() + std::size_t(i) * m;
                for (std::size_t j = 0; j < m; ++j) w[j] = y[j] + ei[j];
                if (i == 0) {
                    g.project_to(w, ny);
                } else {
                    const double d = norm2(w);
                    if (d <= cap) {
                        std::copy(w.begin(), w.end(), ny.begin());
                    } else {
                        for (std::size_t j = 0; j < m; ++j) ny[j] = w[j] * (cap / d);
                    }
                }
                for (std::size_t j = 0; j < m; ++j) {
                    ei[j] = w[j] - ny[j];
                    move = std::max(move, std::fabs(ny[j] - y[j]));
                    y[j] = ny[j];
                }
            }
            const double viol = std::max(g.distance(y), std::max(0.0, norm2(y) - cap));
            if (move < kMoveTol && viol < 5e-13) break;
            if (cycle == kMaxCycles - 1 && viol > 1e-8)
                throw GeometryError("capped support: intersection with the cap ball is empty");
        }
        std::copy(y.begin(), y.end(), out.begin());
    };
    Vec start(m);
    proj(hint, start);
    return support_ascent(std::move(start), u, 4.0 * cap + 1.0,
                          [&](const Vec& w, Vec& q) { proj(w, q); });
}

double hausdorff_capped(const ConvexSet& a, const ConvexSet& b, double cap,
                        std::size_t directions, std::span<const double> hint) {
    if (a.dim() != b.dim()) throw GeometryError("hausdorff: dimension mismatch");
    const auto dirs = direction_mesh(a.dim(), directions);
    double v = 0.0;
    for (const auto& u : dirs)
        v = std::max(v, std::fabs(support_capped(a, cap, u, hint) -
                                  support_capped(b, cap, u, hint)));
    return v;
}

}  // namespace rbsde::geom
