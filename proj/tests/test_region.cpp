#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rbsde/region.hpp"

using namespace rbsde;
using namespace rbsde::region;
using geom::Box;
using geom::ConvexSet;

namespace {

// D = [-2,2] for t < 0.5, [0,2] afterwards
RegionPath contracting_jump() {
    std::vector<ConvexSet> pieces;
    pieces.push_back(ConvexSet(Box{{-2.0}, {2.0}}));
    pieces.push_back(ConvexSet(Box{{0.0}, {2.0}}));
    RegionPath rp = make_piecewise_region({0.5}, std::move(pieces), {{0.0}, {1.0}}, 0.5);
    rp.horizon = 1.0;
    return rp;
}

RegionPath moving_box_1d(double horizon = 1.0) {
    RegionPath rp = make_moving_box({1.0}, {1.0}, 1.0, {0.0}, 1.0);
    rp.horizon = horizon;
    return rp;
}

}  // namespace

TEST_CASE("snapshot and left limits") {
    const RegionPath cj = contracting_jump();
    CHECK(cj.snapshot(0.2).contains(Vec{-1.5}, 0.0));
    // right continuity at the jump
    CHECK(cj.snapshot(0.5).distance(Vec{-1.0}) == doctest::Approx(1.0));
    CHECK(cj.left_limit(0.5).contains(Vec{-1.0}, 0.0));
    CHECK(cj.left_limit(0.4).distance(Vec{-1.0}) == 0.0);
    // at T the convention D_T = D_{T-} holds for this path
    CHECK(geom::hausdorff(cj.snapshot(1.0), cj.left_limit(1.0), 64) == 0.0);

    const RegionPath mb = moving_box_1d();
    const ConvexSet at_half = mb.snapshot(0.5);  // sin(pi/2) = 1 -> [0, 2]
    CHECK(at_half.distance(Vec{0.0}) == 0.0);
    CHECK(at_half.distance(Vec{-0.1}) == doctest::Approx(0.1));
    CHECK(at_half.support(Vec{1.0}) == doctest::Approx(2.0));
}

TEST_CASE("penalization jump grading with the ball cap") {
    const RegionPath cj = contracting_jump();
    // rho = 2 uncapped; capped to B(0,1) it is exactly 1
    CHECK(penalization_jump_times(cj, 4) == std::vector<double>{0.5});
    CHECK(penalization_jump_times(cj, 1).empty());  // 1 > 1 is false
    CHECK(penalization_jump_times(moving_box_1d(), 8).empty());
}

TEST_CASE("discretize produces the expected segment times") {
    RegionPath constant = make_constant_region(ConvexSet(Box{{-1.0}, {1.0}}), std::nullopt, 1.0);
    constant.horizon = 1.0;
    const DiscretizedRegion d4 = discretize(constant, 4);
    REQUIRE(d4.times.size() == 5);
    for (std::size_t i = 0; i < d4.times.size(); ++i)
        CHECK(d4.times[i] == doctest::Approx(0.25 * double(i)));

    // a big jump is forced to be a segment time
    const DiscretizedRegion dj = discretize(contracting_jump(), 4);
    bool has_half = false;
    for (double t : dj.times) has_half = has_half || t == doctest::Approx(0.5);
    CHECK(has_half);
    CHECK(dj.segment_of(0.5) == dj.segment_of(0.6));
    CHECK(dj.segment_of(0.49) + 1 == dj.segment_of(0.5));

    // a small jump is not forced
    std::vector<ConvexSet> pieces;
    pieces.push_back(ConvexSet(Box{{-1.0}, {1.0}}));
    pieces.push_back(ConvexSet(Box{{-0.9}, {1.0}}));
    RegionPath small = make_piecewise_region({0.3}, std::move(pieces), {}, 0.4);
    small.horizon = 1.0;
    const DiscretizedRegion ds = discretize(small, 4);  // jump size 0.1 <= 0.25
    for (double t : ds.times) CHECK(t != doctest::Approx(0.3));

    // segment picks must respect [1/j, 2/j]
    const DiscretizedRegion dp =
        discretize(constant, 4, [](std::size_t) { return 0.5; });
    CHECK(dp.times.size() == 3);  // 0, 0.5, 1
    CHECK_THROWS_AS(discretize(constant, 4, [](std::size_t) { return 0.6; }), RegionError);

    // mesh bound and jump inclusion as a property over j
    for (std::size_t j : {3u, 5u, 9u}) {
        const DiscretizedRegion d = discretize(contracting_jump(), j);
        for (std::size_t i = 0; i + 1 < d.times.size(); ++i)
            CHECK(d.times[i + 1] - d.times[i] <= 2.0 / double(j) + 1e-12);
        bool covered = false;
        for (double t : d.times) covered = covered || t == doctest::Approx(0.5);
        CHECK(covered);  // jump of size 2 > 1/j for every j >= 1
    }
}

TEST_CASE("uniform freezing gap shrinks with j") {
    const RegionPath mb = moving_box_1d();
    const TimeGrid grid = TimeGrid::build(1.0, 64);
    double prev = 1e300;
    for (std::size_t j : {4u, 8u, 16u, 32u}) {
        const DiscretizedRegion disc = discretize(mb, j);
        std::vector<double> req(disc.times.begin(), disc.times.end());
        const TimeGrid g = TimeGrid::build(1.0, 64, req);
        const double gap = uniform_gap(mb, disc, g);
        // translated-box identity: rho equals the centre displacement, so
        // the gap obeys the speed bound pi * (2/j) plus mesh slack
        CHECK(gap <= std::numbers::pi * 2.0 / double(j) + 1e-6);
        CHECK(gap <= prev + 1e-9);
        prev = gap;
    }
}

TEST_CASE("h4 validation passes on the built-in families") {
    const TimeGrid grid = TimeGrid::build(1.0, 128);

    RegionPath ball = make_constant_region(ConvexSet(geom::Ball{{0.0}, 1.0}), Vec{0.0}, 1.0);
    ball.horizon = 1.0;
    const H4Report r1 = validate_h4(ball, grid);
    CHECK(r1.pass);
    CHECK(r1.min_margin == doctest::Approx(1.0));
    CHECK(r1.h2_estimate == 0.0);

    const H4Report r2 = validate_h4(moving_box_1d(), grid);
    CHECK(r2.pass);
    CHECK(r2.min_margin == doctest::Approx(1.0));
    CHECK(r2.h2_estimate > 0.0);  // drift variation of the witness

    const H4Report r3 = validate_h4(contracting_jump(), grid);
    CHECK(r3.pass);
}

TEST_CASE("h4 violation reports the first offending time") {
    // static witness 0.9 inside [sin(pi t)-1, sin(pi t)+1] on T = 2:
    // containment needs sin(pi t) >= -0.1; first failure just after
    // t* = 1 + asin(0.1 - margin)/pi
    RegionPath rp = moving_box_1d(2.0);
    rp.witness_rule = [](double, std::span<const double>) { return Vec{0.9}; };
    rp.margin = 1e-3;
    const TimeGrid grid = TimeGrid::build(2.0, 512);
    const H4Report r = validate_h4(rp, grid);
    CHECK(!r.pass);
    const double t_star = 1.0 + std::asin(0.1 - rp.margin) / std::numbers::pi;  // oracle
    CHECK(r.first_violation_time >= t_star - 1e-9);
    CHECK(r.first_violation_time <= t_star + 2.0 / 512.0);
}

TEST_CASE("adapted family keeps its margin and declares a martingale part") {
    RegionPath rp =
        make_witness_translated(ConvexSet(Box{{-1.0}, {1.0}}), std::nullopt, 0.25, 1.0, 6.0);
    rp.horizon = 1.0;
    const TimeGrid grid = TimeGrid::build(1.0, 32);
    const auto ens = BrownianEnsemble::generate(123, grid, 1, 64);
    const H4Report r = validate_h4(rp, grid, &ens, 16);
    CHECK(r.pass);
    CHECK(r.min_margin == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.h2_estimate > 0.05);  // beta^2-scaled quadratic variation

    const Vec state{0.8};
    CHECK(rp.snapshot(0.3, state).contains(Vec{1.1}, 1e-12));
    CHECK(rp.witness(0.3, state)[0] == doctest::Approx(0.2));
}

TEST_CASE("left limits equal snapshots away from declared jumps") {
    const RegionPath cj = contracting_jump();
    for (double t : {0.1, 0.3, 0.7, 0.9, 1.0})
        CHECK(geom::hausdorff(cj.left_limit(t), cj.snapshot(t), 64) == 0.0);
}
