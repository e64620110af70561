#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "rbsde/backend.hpp"
#include "rbsde/ensemble.hpp"
#include "rbsde/random.hpp"

using namespace rbsde;

TEST_CASE("normal inverse cdf sanity") {
    CHECK(normal_icdf(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(normal_icdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_icdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(normal_icdf(1e-10) < -6.0);
}

TEST_CASE("time grid construction") {
    const double req[] = {0.5, 0.123456};
    const TimeGrid g = TimeGrid::build(1.0, 10, req);
    CHECK(g.horizon() == 1.0);
    CHECK(g.has_node(0.5));
    CHECK(g.has_node(0.123456));
    CHECK(g.has_node(0.0));
    CHECK(g.has_node(1.0));
    CHECK(g.max_dt() <= 0.1 + 1e-12);
    CHECK(g.index_of(0.5) > 0);
    CHECK_THROWS_AS(g.index_of(0.3333), EngineError);
    CHECK(TimeGrid::build(1.0, 8).uniform());
    CHECK(!g.uniform());
}

TEST_CASE("ensemble determinism and counter addressing") {
    const TimeGrid g = TimeGrid::build(1.0, 16);
    const auto e1 = BrownianEnsemble::generate(1, g, 2, 4);
    const auto e2 = BrownianEnsemble::generate(1, g, 2, 4);
    const auto big = BrownianEnsemble::generate(1, g, 2, 1000);
    for (std::size_t k = 0; k < g.steps(); ++k) {
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(e1.increment(0, k)[c] == e2.increment(0, k)[c]);
            CHECK(e1.increment(3, k)[c] == big.increment(3, k)[c]);  // path addressing
        }
    }
    const auto other = BrownianEnsemble::generate(2, g, 2, 4);
    CHECK(e1.increment(0, 0)[0] != other.increment(0, 0)[0]);
}

TEST_CASE("terminal moments at scale") {
    const TimeGrid g = TimeGrid::build(1.0, 8);
    const std::size_t P = 100000;
    const auto e = BrownianEnsemble::generate(7, g, 1, P);
    double mean = 0.0, var = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        const double w = e.value(p, g.steps())[0];
        mean += w;
        var += w * w;
    }
    mean /= double(P);
    var = var / double(P) - mean * mean;
    CHECK(std::fabs(mean) <= 4.0 / std::sqrt(double(P)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("memory budget is enforced") {
    setenv("RBSDE_MEMORY_BUDGET_MB", "1", 1);
    const TimeGrid g = TimeGrid::build(1.0, 100);
    CHECK_THROWS_AS(BrownianEnsemble::generate(1, g, 4, 100000), EngineError);
    unsetenv("RBSDE_MEMORY_BUDGET_MB");
    CHECK_NOTHROW(BrownianEnsemble::generate(1, g, 1, 100));
}

TEST_CASE("regression backend: constants, martingale and orthogonality") {
    const TimeGrid g = TimeGrid::build(1.0, 10);
    const std::size_t P = 20000;
    const auto e = BrownianEnsemble::generate(11, g, 1, P);
    const RegressionBackend be(e, 3);

    // constants are preserved exactly
    std::vector<double> c(P, 3.25);
    const auto fit = be.condexp(4, c);
    for (std::size_t p = 0; p < P; p += 997) CHECK(fit[p] == doctest::Approx(3.25).epsilon(1e-12));

    // E[W_{k+1} | F_k] = W_k up to regression error
    std::vector<double> wnext(P);
    for (std::size_t p = 0; p < P; ++p) wnext[p] = e.value(p, 5)[0];
    const auto mart = be.condexp(4, wnext);
    double rmse = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        const double d = mart[p] - e.value(p, 4)[0];
        rmse += d * d;
    }
    CHECK(std::sqrt(rmse / double(P)) < 0.02);

    // residual orthogonality to the linear feature
    double dotf = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        const double r = wnext[p] - mart[p];
        dotf += r * e.value(p, 4)[0];
        scale += std::fabs(wnext[p]);
    }
    CHECK(std::fabs(dotf / double(P)) <= 1e-8 * (1.0 + scale / double(P)));

    // weighted form: E[c dW] = 0, E[dW dW] = dt
    const auto w0 = be.condexp_weighted(4, c, 0);
    double mw = 0.0;
    for (double v : w0) mw += v;
    CHECK(std::fabs(mw / double(P)) < 3.25 * 3.0 * std::sqrt(g.dt(4) / double(P)));
    std::vector<double> dw(P);
    for (std::size_t p = 0; p < P; ++p) dw[p] = e.increment(p, 4)[0];
    const auto w1 = be.condexp_weighted(4, dw, 0);
    double mdw = 0.0;
    for (double v : w1) mdw += v;
    CHECK(mdw / double(P) == doctest::Approx(g.dt(4)).epsilon(0.05));
}

TEST_CASE("regression rank-deficiency and path-count guards") {
    const TimeGrid g = TimeGrid::build(1.0, 4);
    const auto e = BrownianEnsemble::generate(3, g, 1, 30);
    CHECK_THROWS_AS(RegressionBackend(e, 3), EngineError);  // 30 < 10 * 4
    CHECK_NOTHROW(RegressionBackend(e, 1));
}

TEST_CASE("tree backend exactness") {
    const TimeGrid g = TimeGrid::build(1.0, 20);
    const TreeBackend tr(g, 1);
    CHECK(tr.count(0) == 1);
    CHECK(tr.count(20) == 21);

    // odd terminal functional averages to zero exactly at the root
    std::vector<double> v(tr.count(20));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(tr.state(20, i)[0]);
    for (std::size_t k = 20; k-- > 0;) v = tr.condexp(k, v);
    REQUIRE(v.size() == 1);
    CHECK(std::fabs(v[0]) < 1e-12);

    // tower property is exact: E_k [ E_{k+1} v ] = E_k across two levels
    std::vector<double> w(tr.count(6));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(double(i));
    const auto two_step = tr.condexp(4, tr.condexp(5, w));
    // direct two-level average
    std::vector<double> direct(tr.count(4), 0.0);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        double s = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) s += w[i + std::size_t(a) + std::size_t(b)];
        direct[i] = 0.25 * s;
    }
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(two_step[i] == doctest::Approx(direct[i]).epsilon(1e-14));

    // weighted: E[dW | node] = 0, E[dW^2] = dt
    std::vector<double> ones(tr.count(8), 1.0);
    const auto zw = tr.condexp_weighted(7, ones, 0);
    for (double z : zw) CHECK(z == doctest::Approx(0.0).epsilon(1e-15));

    CHECK_THROWS_AS(TreeBackend(g, 3), EngineError);
    CHECK_THROWS_AS(TreeBackend(TimeGrid::build(1.0, 30), 1), EngineError);
    const double req[] = {0.0123};
    CHECK_THROWS_AS(TreeBackend(TimeGrid::build(1.0, 10, req), 1), EngineError);
}

TEST_CASE("backend equivalence at the root for a smooth terminal") {
    const TimeGrid g = TimeGrid::build(1.0, 20);
    const TreeBackend tr(g, 1);
    std::vector<double> v(tr.count(20));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(tr.state(20, i)[0]) + 0.3;
    for (std::size_t k = 20; k-- > 0;) v = tr.condexp(k, v);
    const double tree_root = v[0];

    const std::size_t P = 100000;
    const auto e = BrownianEnsemble::generate(5, g, 1, P);
    const RegressionBackend be(e, 3);
    std::vector<double> mc(P);
    for (std::size_t p = 0; p < P; ++p) mc[p] = std::tanh(e.value(p, 20)[0]) + 0.3;
    for (std::size_t k = 20; k-- > 0;) mc = be.condexp(k, mc);
    double mean = 0.0, var = 0.0;
    for (std::size_t p = 0; p < P; ++p) mean += std::tanh(e.value(p, 20)[0]) + 0.3;
    mean /= double(P);
    for (std::size_t p = 0; p < P; ++p) {
        const double dres = std::tanh(e.value(p, 20)[0]) + 0.3 - mean;
        var += dres * dres;
    }
    const double se = std::sqrt(var / double(P) / double(P));
    CHECK(std::fabs(mc[0] - tree_root) <= 3.0 * se + 2e-3);  // tree discretization slack
}

TEST_CASE("h2 norm estimates") {
    const TimeGrid g = TimeGrid::build(1.0, 50);
    const std::size_t P = 10000, nodes = g.steps() + 1;

    // X = W: quadratic variation 1, no drift
    const auto e = BrownianEnsemble::generate(17, g, 1, P);
    std::vector<double> mart(P * nodes), drift(P * nodes, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < nodes; ++k) mart[p * nodes + k] = e.value(p, k)[0];
    CHECK(h2_norm_estimate(mart, drift, P, nodes, 1) == doctest::Approx(1.0).epsilon(0.05));

    // X_t = t: pure drift with variation exactly 1
    std::fill(mart.begin(), mart.end(), 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < nodes; ++k) drift[p * nodes + k] = g.time(k);
    CHECK(h2_norm_estimate(mart, drift, P, nodes, 1) == doctest::Approx(1.0).epsilon(1e-12));

    // constant process
    std::fill(drift.begin(), drift.end(), 4.0);
    CHECK(h2_norm_estimate(mart, drift, P, nodes, 1) == 0.0);
}
