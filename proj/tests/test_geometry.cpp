#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rbsde/geometry.hpp"
#include "rbsde/random.hpp"

using namespace rbsde;
using namespace rbsde::geom;

namespace {

ConvexSet unit_simplexish() {
    // x + y <= 1, x >= 0, y >= 0
    Polytope p;
    p.faces.push_back({{1.0, 1.0}, 1.0});
    p.faces.push_back({{-1.0, 0.0}, 0.0});
    p.faces.push_back({{0.0, -1.0}, 0.0});
    return ConvexSet(std::move(p), Vec{0.2, 0.2});
}

// brute-force projection oracle: dense scan of the feasible triangle
Vec grid_search_projection(const Vec& x) {
    double best = 1e300;
    Vec arg{0.0, 0.0};
    const int n = 2000;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n - i; ++j) {
            const Vec y{double(i) / n, double(j) / n};
            const double d = dist2(x, y);
            if (d < best) {
                best = d;
                arg = y;
            }
        }
    }
    return arg;
}

Vec sample_point(const CounterRng& rng, std::uint64_t q, double radius, std::size_t m) {
    Vec x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = radius * rng.normal(q, i);
    return x;
}

}  // namespace

TEST_CASE("closed-form projections") {
    const ConvexSet ball(Ball{{0.0, 0.0}, 1.0});
    const Vec p1 = ball.project(Vec{2.0, 0.0});
    CHECK(p1[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p1[1] == doctest::Approx(0.0).epsilon(1e-14));

    const ConvexSet box(Box{{-1.0, -1.0}, {1.0, 1.0}});
    const Vec p2 = box.project(Vec{0.5, 3.0});
    CHECK(p2[0] == doctest::Approx(0.5));
    CHECK(p2[1] == doctest::Approx(1.0));

    CHECK(ball.distance(Vec{2.0, 0.0}) == doctest::Approx(1.0));
    CHECK(box.distance(Vec{2.0, 2.0}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(ball.distance(ball.slater()) == 0.0);
}

TEST_CASE("polytope projection matches the grid-search oracle") {
    const ConvexSet tri = unit_simplexish();
    const Vec got = tri.project(Vec{1.0, 1.0});
    const Vec oracle = grid_search_projection(Vec{1.0, 1.0});
    CHECK(got[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(got[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(dist2(got, oracle) < 2e-3);  // oracle grid resolution

    // a couple of other exterior points against the oracle
    for (const Vec& x : {Vec{1.4, 0.2}, Vec{-0.5, 0.7}, Vec{0.9, -0.8}}) {
        const Vec pg = tri.project(x);
        const Vec po = grid_search_projection(x);
        CHECK(dist2(pg, po) < 2e-3);
        CHECK(tri.distance(pg) <= 1e-12);
    }
}

TEST_CASE("boundary distances") {
    const ConvexSet ball(Ball{{0.0, 0.0}, 2.0});
    CHECK(ball.boundary_distance(Vec{1.0, 0.0}) == doctest::Approx(1.0));

    const ConvexSet box(Box{{-1.0, -1.0}, {1.0, 1.0}});
    CHECK(box.boundary_distance(Vec{0.0, 0.0}) == doctest::Approx(1.0));

    Polytope slab;
    slab.faces.push_back({{1.0}, 1.0});
    slab.faces.push_back({{-1.0}, 1.0});
    const ConvexSet seg(std::move(slab), Vec{0.0});
    CHECK(seg.boundary_distance(Vec{0.7}) == doctest::Approx(0.3));

    CHECK_THROWS_AS(ball.boundary_distance(Vec{3.0, 0.0}), GeometryError);
}

TEST_CASE("support functions") {
    const ConvexSet ball(Ball{{1.0, 0.0}, 1.0});
    CHECK(ball.support(Vec{1.0, 0.0}) == doctest::Approx(2.0));

    const ConvexSet box(Box{{-1.0, -1.0}, {1.0, 1.0}});
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(box.support(Vec{s, s}) == doctest::Approx(std::sqrt(2.0)));

    const ConvexSet tri = unit_simplexish();
    // vertex-enumeration oracle: vertices are (0,0), (1,0), (0,1)
    CHECK(tri.support(Vec{0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tri.support(Vec{s, s}) == doctest::Approx(s).epsilon(1e-12));

    // unbounded direction detection
    Polytope half;
    half.faces.push_back({{1.0, 0.0}, 1.0});
    half.faces.push_back({{0.0, 1.0}, 1.0});
    const ConvexSet corner(std::move(half), Vec{0.0, 0.0});
    CHECK_THROWS_AS(corner.support(Vec{-1.0, 0.0}), GeometryError);
    CHECK(!corner.bounded());
    CHECK(tri.bounded());
}

TEST_CASE("intersection variant") {
    Intersection in;
    in.members.push_back(ConvexSet(Ball{{0.0, 0.0}, 1.0}));
    in.members.push_back(ConvexSet(Box{{0.0, -2.0}, {2.0, 2.0}}));
    const ConvexSet lens(std::move(in), Vec{0.3, 0.0});

    // projection of a point deep in the excluded half
    const Vec p = lens.project(Vec{-1.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(lens.distance(p) <= 1e-10);

    // support along +x is the ball's rim, along -x the box's face
    CHECK(lens.support(Vec{1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lens.support(Vec{-1.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(lens.bounded());
}

TEST_CASE("hausdorff ball identity and metric behaviour") {
    const ConvexSet b1(Ball{{0.0, 0.0}, 1.0});
    const ConvexSet b2(Ball{{0.5, 0.0}, 1.0});
    const ConvexSet b3(Ball{{0.0, 0.0}, 2.0});

    CHECK(hausdorff(b1, b1, 64) == 0.0);
    CHECK(hausdorff(b1, b2, 4096) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(hausdorff(b1, b3, 64) == doctest::Approx(1.0).epsilon(1e-9));

    const auto est = hausdorff_estimate(b1, b2, 4096);
    CHECK(est.resolution < 1e-5);

    // symmetry exact, triangle inequality within twice the mesh slack
    const CounterRng rng(99);
    for (std::uint64_t q = 0; q < 10; ++q) {
        const ConvexSet x(Ball{sample_point(rng, q, 1.0, 2), 0.5 + rng.uniform(q, 10)});
        const ConvexSet y(Ball{sample_point(rng, q + 100, 1.0, 2), 0.5 + rng.uniform(q, 11)});
        const ConvexSet z(Ball{sample_point(rng, q + 200, 1.0, 2), 0.5 + rng.uniform(q, 12)});
        const double dxy = hausdorff(x, y, 256), dyz = hausdorff(y, z, 256),
                     dxz = hausdorff(x, z, 256);
        CHECK(hausdorff(y, x, 256) == doctest::Approx(dxy).epsilon(1e-14));
        const auto ex = hausdorff_estimate(x, z, 256);
        CHECK(dxz <= dxy + dyz + 2.0 * ex.resolution);
    }
}

TEST_CASE("capped support against the interval example") {
    // [-2,2] vs [0,2]: plain Hausdorff distance is 2, capped to B(0,1) it is 1
    const ConvexSet wide(Box{{-2.0}, {2.0}});
    const ConvexSet narrow(Box{{0.0}, {2.0}});
    CHECK(hausdorff(wide, narrow, 64) == doctest::Approx(2.0).epsilon(1e-12));
    const Vec hint{1.0};
    CHECK(hausdorff_capped(wide, narrow, 1.0, 64, hint) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(hausdorff_capped(wide, narrow, 4.0, 64, hint) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("projection properties on sampled probes") {
    std::vector<ConvexSet> sets;
    sets.push_back(ConvexSet(Ball{{0.2, -0.1}, 0.8}));
    sets.push_back(ConvexSet(Box{{-1.0, -0.5}, {0.5, 1.0}}));
    sets.push_back(unit_simplexish());
    {
        Intersection in;
        in.members.push_back(ConvexSet(Ball{{0.0, 0.0}, 1.0}));
        in.members.push_back(ConvexSet(Box{{-0.8, -2.0}, {0.8, 2.0}}));
        sets.push_back(ConvexSet(std::move(in), Vec{0.0, 0.0}));
    }
    const CounterRng rng(2024);
    for (const auto& g : sets) {
        const Vec a = g.slater();
        const double bd = g.boundary_distance(a);
        for (std::uint64_t q = 0; q < 500; ++q) {
            const Vec x = sample_point(rng, q, 2.0, 2);
            const Vec x2 = sample_point(rng, q + 1000, 2.0, 2);
            const Vec px = g.project(x);
            const Vec px2 = g.project(x2);

            // idempotence
            CHECK(dist2(g.project(px), px) <= 1e-10);
            // monotonicity of x - proj(x)
            double mono = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                mono += (x[i] - x2[i]) * ((x[i] - px[i]) - (x2[i] - px2[i]));
            CHECK(mono >= -1e-10);
            // 1-Lipschitz
            CHECK(dist2(px, px2) <= dist2(x, x2) + 1e-10);

            if (g.distance(x) > 1e-8) {
                // inward normal points from x to its projection
                Vec n(2);
                for (std::size_t i = 0; i < 2; ++i) n[i] = px[i] - x[i];
                const double nn = norm2(n);
                for (auto& v : n) v /= nn;
                double inner = 0.0, inner_c = 0.0;
                for (std::size_t i = 0; i < 2; ++i) {
                    inner += (px[i] - a[i]) * n[i];
                    inner_c += (x[i] - a[i]) * (px[i] - x[i]);
                }
                CHECK(inner <= -bd + 1e-8);
                CHECK(inner_c <= -bd * nn + 1e-8);
            }
        }
    }
}

TEST_CASE("set construction validation") {
    CHECK_THROWS_AS(ConvexSet(Ball{{0.0}, -1.0}), GeometryError);
    CHECK_THROWS_AS(ConvexSet(Box{{1.0}, {0.0}}), GeometryError);
    Polytope p;
    p.faces.push_back({{1.0, 0.0}, 0.0});
    CHECK_THROWS_AS(ConvexSet(std::move(p), Vec{1.0, 0.0}), GeometryError);  // slater outside

    // normals are normalized on construction
    Polytope q;
    q.faces.push_back({{2.0, 0.0}, 4.0});
    q.faces.push_back({{-2.0, 0.0}, 0.0});
    q.faces.push_back({{0.0, 2.0}, 4.0});
    q.faces.push_back({{0.0, -2.0}, 0.0});
    const ConvexSet sq(std::move(q), Vec{1.0, 1.0});
    const auto& faces = std::get<Polytope>(sq.shape()).faces;
    for (const auto& f : faces) CHECK(norm2(f.normal) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sq.support(Vec{1.0, 0.0}) == doctest::Approx(2.0));
    CHECK(sq.contains(Vec{1.0, 1.0}, 0.0));
    CHECK(!sq.contains(Vec{2.5, 1.0}, 0.1));
    CHECK(sq.contains(Vec{2.0 + 1e-9, 1.0}, 1e-8));
}

TEST_CASE("direction meshes are deterministic and unit length") {
    for (std::size_t m : {1u, 2u, 3u, 5u}) {
        const auto d1 = direction_mesh(m, 64);
        const auto d2 = direction_mesh(m, 64);
        REQUIRE(d1.size() == d2.size());
        for (std::size_t i = 0; i < d1.size(); ++i) {
            CHECK(norm2(d1[i]) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(d1[i] == d2[i]);
        }
    }
    CHECK(direction_mesh(1, 64).size() == 2);
}

TEST_CASE("translated sets") {
    const ConvexSet tri = unit_simplexish();
    const ConvexSet moved = translated(tri, Vec{1.0, -1.0});
    CHECK(moved.contains(Vec{1.2, -0.8}, 1e-12));
    CHECK(moved.support(Vec{0.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hausdorff(tri, moved, 512) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
}
