#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "rbsde/errors.hpp"
#include "rbsde/linalg.hpp"

namespace rbsde::geom {

inline constexpr std::size_t kMaxDim = 16;

/// normal . x <= offset, with |normal| = 1 after construction.
struct Halfspace {
    Vec normal;
    double offset = 0.0;
};

struct Ball {
    Vec center;
    double radius = 0.0;
};

struct Box {
    Vec lower, upper;
};

struct Polytope {
    std::vector<Halfspace> faces;
};

class ConvexSet;

struct Intersection {
    std::vector<ConvexSet> members;
};

/// A closed convex set with nonempty interior in R^m. Every instance stores
/// an interior (Slater) point with strictly positive distance to the
/// boundary; construction validates it. Value type, immutable after
/// construction, safe to share across threads.
class ConvexSet {
public:
    using Shape = std::variant<Ball, Box, Polytope, Intersection>;

    explicit ConvexSet(Ball b);                 // Slater point = center
    explicit ConvexSet(Box b);                  // Slater point = midpoint
    ConvexSet(Polytope p, Vec slater);
    ConvexSet(Intersection i, Vec slater);

    std::size_t dim() const { return dim_; }
    const Vec& slater() const { return slater_; }
    const Shape& shape() const { return shape_; }

    /// Euclidean projection onto the set. Ball/Box are closed-form;
    /// Polytope/Intersection run Dykstra's alternating projections to a
    /// 1e-10 fixed point (at most 10000 cycles).
    void project_to(std::span<const double> x, std::span<double> out) const;
    Vec project(std::span<const double> x) const;

    /// |x - project(x)|; zero iff x is in the set.
    double distance(std::span<const double> x) const;

    bool contains(std::span<const double> x, double tol) const;

    /// Distance from an interior-or-boundary point to the boundary.
    /// Throws GeometryError when a lies outside the set (beyond 1e-12).
    /// For Intersection the value is min over members, a lower bound.
    double boundary_distance(std::span<const double> a) const;

    /// Support function h(u) = sup_{x in set} <x,u> for unit u.
    /// Polytope: exact active-set/vertex enumeration with an optimality
    /// certificate (throws on unbounded directions). Intersection:
    /// inner approximation by projected support ascent, refined in the
    /// requested direction.
    double support(std::span<const double> u) const;

    /// True when the set is certainly bounded (Ball, Box, a Polytope whose
    /// axis supports all exist, or an Intersection with a bounded member).
    bool bounded() const;

    /// Upper bound for sup_{x in set} |x|. Requires bounded().
    double bounding_radius() const;

private:
    Shape shape_;
    Vec slater_;
    std::size_t dim_ = 0;

    void validate_slater() const;
};

/// The set shifted by a constant vector (shape-preserving).
ConvexSet translated(const ConvexSet& g, std::span<const double> shift);

/// Deterministic quasi-uniform unit directions: {+1,-1} for m=1, uniform
/// angles for m=2, Fibonacci sphere for m=3, a seeded Gaussian mesh above.
std::vector<Vec> direction_mesh(std::size_t m, std::size_t count);

/// Angular resolution of direction_mesh(m, count); heuristic for m > 3.
double mesh_angle(std::size_t m, std::size_t count);

struct HausdorffEstimate {
    double value = 0.0;       // max_u |h_a(u) - h_b(u)| over the mesh
    double resolution = 0.0;  // diam * (1 - cos(mesh angle))
};

/// Hausdorff distance of two bounded sets through the support-function
/// identity rho(A,B) = sup_{|u|=1} |h_A(u) - h_B(u)|, sampled on a
/// direction mesh. Throws on unbounded inputs; directions >= 16.
HausdorffEstimate hausdorff_estimate(const ConvexSet& a, const ConvexSet& b,
                                     std::size_t directions);
double hausdorff(const ConvexSet& a, const ConvexSet& b, std::size_t directions);

/// Support of set ∩ B(0, cap) without materializing the intersection;
/// `hint` must be a point of the capped set (used to seed the ascent).
double support_capped(const ConvexSet& g, double cap, std::span<const double> u,
                      std::span<const double> hint);

/// Hausdorff distance of the two capped sets, via support_capped.
double hausdorff_capped(const ConvexSet& a, const ConvexSet& b, double cap,
                        std::size_t directions, std::span<const double> hint);

}  // namespace rbsde::geom
