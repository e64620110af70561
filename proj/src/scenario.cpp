#include "rbsde/scenario.hpp"

#include <cmath>
#include <fstream>

namespace rbsde::cli {

namespace {

using geom::ConvexSet;

Vec vec_from(const json& j) {
    if (!j.is_array()) throw ScenarioError("expected a number array");
    Vec v;
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

double num_or(const json& j, const char* key, double dflt) {
    return j.contains(key) ? j.at(key).get<double>() : dflt;
}

// driver families
DriverSpec driver_from_json(const json& j, std::size_t m, std::size_t d) {
    DriverSpec out;
    const std::string family = j.value("family", "zero");
    if (family == "zero") {
        out.zero = true;
        return out;
    }
    out.zero = false;
    if (family == "constant") {
        Vec c = vec_from(j.at("value"));
        if (c.size() != m) throw ScenarioError("driver constant size != m");
        out.f = [c](double, std::span<const double>, std::span<const double>,
                    std::span<double> fo) {
            for (std::size_t i = 0; i < fo.size(); ++i) fo[i] = c[i];
        };
        out.mu = 0.0;
        out.lambda = 0.0;
        return out;
    }
    if (family == "linear") {
        const double alpha = num_or(j, "alpha", 0.0);
        const double beta = num_or(j, "beta", 0.0);
        Vec c = j.contains("constant") ? vec_from(j.at("constant")) : Vec(m, 0.0);
        if (c.size() != m) throw ScenarioError("driver constant size != m");
        out.f = [alpha, beta, c, d](double, std::span<const double> y,
                                    std::span<const double> z, std::span<double> fo) {
            for (std::size_t i = 0; i < fo.size(); ++i) {
                double zs = 0.0;
                for (std::size_t k = 0; k < d; ++k) zs += z[i * d + k];
                fo[i] = alpha * y[i] + beta * zs + c[i];
            }
        };
        out.mu = std::fabs(alpha);
        out.lambda = std::fabs(beta) * std::sqrt(double(d));
        return out;
    }
    throw ScenarioError("unknown driver family '" + family + "'");
}

// terminal families; the project-wiener family captures the region so the
// value is projected onto D_T per path
TerminalSpec terminal_from_json(const json& j, const region::RegionPath& region, std::size_t m,
                                std::size_t d) {
    TerminalSpec out;
    out.requires_containment = j.value("require_containment", true);
    const std::string family = j.value("family", "project-wiener");
    if (family == "constant") {
        Vec c = vec_from(j.at("value"));
        if (c.size() != m) throw ScenarioError("terminal constant size != m");
        out.xi = [c](std::span<const double>, std::span<double> o) {
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = c[i];
        };
        return out;
    }
    if (family == "tanh") {
        const double scale = num_or(j, "scale", 1.0);
        out.xi = [scale, d](std::span<const double> w, std::span<double> o) {
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(scale * w[i % d]);
        };
        return out;
    }
    if (family == "linear") {
        const double scale = num_or(j, "scale", 1.0);
        out.xi = [scale, d](std::span<const double> w, std::span<double> o) {
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = scale * (i < d ? w[i] : 0.0);
        };
        return out;
    }
    if (family == "project-wiener") {
        const double scale = num_or(j, "scale", 1.0);
        const double T = region.horizon;
        auto rp = region;  // value copy shared by the closure
        out.xi = [scale, d, T, rp](std::span<const double> w, std::span<double> o) {
            Vec raw(o.size(), 0.0);
            for (std::size_t i = 0; i < o.size() && i < d; ++i) raw[i] = scale * w[i];
            rp.snapshot(T, w).project_to(raw, o);
        };
        return out;
    }
    throw ScenarioError("unknown terminal family '" + family + "'");
}

region::RegionPath region_from_json(const json& j, double horizon, std::size_t m) {
    const std::string family = j.value("family", "constant");
    region::RegionPath rp;
    if (family == "constant") {
        ConvexSet set = set_from_json(j.at("set"));
        std::optional<Vec> witness;
        if (j.contains("witness")) witness = vec_from(j.at("witness"));
        const Vec w = witness.value_or(set.slater());
        const double margin = num_or(j, "margin", set.boundary_distance(w));
        rp = region::make_constant_region(std::move(set), witness, margin);
    } else if (family == "moving-box") {
        Vec hw = vec_from(j.at("halfwidth"));
        Vec amp = vec_from(j.at("amplitude"));
        Vec phase = j.contains("phase") ? vec_from(j.at("phase")) : Vec(hw.size(), 0.0);
        const double freq = num_or(j, "frequency", 1.0);
        double dflt = hw.empty() ? 0.0 : *std::min_element(hw.begin(), hw.end());
        rp = region::make_moving_box(hw, amp, freq, phase, num_or(j, "margin", dflt));
    } else if (family == "breathing-ball") {
        Vec c = vec_from(j.at("center"));
        const double r0 = j.at("radius").get<double>();
        const double amp = num_or(j, "amplitude", 0.0);
        const double freq = num_or(j, "frequency", 1.0);
        rp = region::make_breathing_ball(c, r0, amp, freq,
                                         num_or(j, "margin", r0 - std::fabs(amp)));
    } else if (family == "rotating-polytope") {
        std::vector<geom::Halfspace> faces;
        double min_offset = 1e300;
        for (const auto& h : j.at("halfspaces")) {
            geom::Halfspace f{vec_from(h.at("normal")), h.at("offset").get<double>()};
            const double n = norm2(f.normal);
            min_offset = std::min(min_offset, f.offset / n);
            faces.push_back(std::move(f));
        }
        const double omega = num_or(j, "omega", 1.0);
        rp = region::make_rotating_polytope(std::move(faces), omega,
                                            num_or(j, "margin", min_offset));
    } else if (family == "piecewise") {
        std::vector<double> jumps;
        for (const auto& t : j.at("jumps")) jumps.push_back(t.get<double>());
        std::vector<ConvexSet> pieces;
        for (const auto& s : j.at("sets")) pieces.push_back(set_from_json(s));
        std::vector<Vec> witnesses;
        if (j.contains("witnesses"))
            for (const auto& w : j.at("witnesses")) witnesses.push_back(vec_from(w));
        double dflt = 1e300;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const Vec w = i < witnesses.size() ? witnesses[i] : pieces[i].slater();
            dflt = std::min(dflt, pieces[i].boundary_distance(w));
        }
        rp = region::make_piecewise_region(std::move(jumps), std::move(pieces),
                                           std::move(witnesses), num_or(j, "margin", dflt));
    } else if (family == "witness-translated") {
        ConvexSet base = set_from_json(j.at("set"));
        std::optional<Vec> witness;
        if (j.contains("witness")) witness = vec_from(j.at("witness"));
        const double beta = num_or(j, "beta", 0.1);
        const Vec w = witness.value_or(base.slater());
        const double margin = num_or(j, "margin", base.boundary_distance(w));
        const double allowance = num_or(j, "state_radius", 6.0 * std::sqrt(horizon));
        rp = region::make_witness_translated(std::move(base), witness, beta, margin, allowance);
    } else {
        throw ScenarioError("unknown region family '" + family + "'");
    }
    rp.horizon = horizon;
    if (rp.dim != m) throw ScenarioError("region dimension != m");
    for (double t : rp.jump_times)
        if (t <= 0.0 || t >= horizon)
            throw ScenarioError("declared jump times must lie in (0, T)");
    return rp;
}

}  // namespace

ConvexSet set_from_json(const json& j) {
    const std::string type = j.value("type", "");
    if (type == "ball")
        return ConvexSet(geom::Ball{vec_from(j.at("center")), j.at("radius").get<double>()});
    if (type == "box")
        return ConvexSet(geom::Box{vec_from(j.at("lower")), vec_from(j.at("upper"))});
    if (type == "polytope") {
        geom::Polytope p;
        for (const auto& h : j.at("halfspaces"))
            p.faces.push_back({vec_from(h.at("normal")), h.at("offset").get<double>()});
        return ConvexSet(std::move(p), vec_from(j.at("slater")));
    }
    if (type == "intersection") {
        geom::Intersection in;
        for (const auto& mj : j.at("members")) in.members.push_back(set_from_json(mj));
        return ConvexSet(std::move(in), vec_from(j.at("slater")));
    }
    throw ScenarioError("unknown set type '" + type + "'");
}

json set_to_json(const ConvexSet& s) {
    json j;
    std::visit(
        [&](const auto& sh) {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, geom::Ball>) {
                j["type"] = "ball";
                j["center"] = sh.center;
                j["radius"] = sh.radius;
            } else if constexpr (std::is_same_v<T, geom::Box>) {
                j["type"] = "box";
                j["lower"] = sh.lower;
                j["upper"] = sh.upper;
            } else if constexpr (std::is_same_v<T, geom::Polytope>) {
                j["type"] = "polytope";
                j["halfspaces"] = json::array();
                for (const auto& f : sh.faces)
                    j["halfspaces"].push_back({{"normal", f.normal}, {"offset", f.offset}});
                j["slater"] = s.slater();
            } else {
                j["type"] = "intersection";
                j["members"] = json::array();
                for (const auto& mem : sh.members) j["members"].push_back(set_to_json(mem));
                j["slater"] = s.slater();
            }
        },
        s.shape());
    return j;
}

Scenario scenario_from_json(const json& j) {
    Scenario s;
    s.name = j.value("name", "unnamed");
    s.horizon = j.value("T", 1.0);
    if (!(s.horizon > 0.0)) throw ScenarioError("T must be positive");
    s.m = j.value("m", 1);
    s.d = j.value("d", 1);
    s.steps = j.contains("grid") ? j.at("grid").value("steps", 200) : 200;
    if (j.contains("ensemble")) {
        s.seed = j.at("ensemble").value("seed", std::uint64_t(42));
        s.paths = j.at("ensemble").value("paths", std::size_t(10000));
    }
    if (j.contains("backend")) {
        s.backend.type = j.at("backend").value("type", "regression");
        s.backend.degree = j.at("backend").value("degree", std::size_t(3));
        if (s.backend.type != "regression" && s.backend.type != "tree")
            throw ScenarioError("unknown backend type '" + s.backend.type + "'");
    }
    if (j.contains("scheme")) {
        const auto& sj = j.at("scheme");
        if (sj.contains("penalized"))
            for (const auto& v : sj.at("penalized")) s.scheme.penalized.push_back(v.get<std::size_t>());
        if (sj.contains("piecewise"))
            for (const auto& v : sj.at("piecewise")) s.scheme.piecewise.push_back(v.get<std::size_t>());
    }
    if (s.scheme.penalized.empty() && s.scheme.piecewise.empty())
        s.scheme.penalized = {128};
    if (j.contains("checks")) {
        const auto& cj = j.at("checks");
        s.checks.containment_c = cj.value("containment_c", 1.0);
        s.checks.skorokhod_processes = cj.value("skorokhod_processes", std::size_t(10));
        s.checks.apriori = cj.value("apriori", true);
        if (cj.contains("stability_deltas"))
            for (const auto& v : cj.at("stability_deltas"))
                s.checks.stability_deltas.push_back(v.get<double>());
    }

    if (!j.contains("region")) throw ScenarioError("scenario needs a region");
    s.region = region_from_json(j.at("region"), s.horizon, s.m);
    s.driver = driver_from_json(j.contains("driver") ? j.at("driver") : json::object(), s.m, s.d);
    s.terminal = terminal_from_json(j.contains("terminal") ? j.at("terminal") : json::object(),
                                    s.region, s.m, s.d);

    // resolved echo: every default made explicit
    json r = j;
    r["name"] = s.name;
    r["T"] = s.horizon;
    r["m"] = s.m;
    r["d"] = s.d;
    r["grid"]["steps"] = s.steps;
    r["ensemble"]["seed"] = s.seed;
    r["ensemble"]["paths"] = s.paths;
    r["backend"]["type"] = s.backend.type;
    r["backend"]["degree"] = s.backend.degree;
    r["scheme"]["penalized"] = s.scheme.penalized;
    r["scheme"]["piecewise"] = s.scheme.piecewise;
    r["checks"]["containment_c"] = s.checks.containment_c;
    r["checks"]["skorokhod_processes"] = s.checks.skorokhod_processes;
    r["checks"]["apriori"] = s.checks.apriori;
    r["checks"]["stability_deltas"] = s.checks.stability_deltas;
    r["region"]["margin"] = s.region.margin;
    s.resolved = std::move(r);
    return s;
}

Scenario parse_scenario(const std::string& file_path) {
    std::ifstream in(file_path);
    if (!in) throw ScenarioError("cannot open scenario file '" + file_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ScenarioError("scenario parse error in '" + file_path + "': " + e.what());
    }
    return scenario_from_json(j);
}

TerminalSpec perturb_terminal(const Scenario& s, double delta, bool project) {
    const auto base = s.terminal.xi;
    const std::size_t m = s.m;
    const double per_coord = delta / std::sqrt(double(m));
    auto rp = s.region;
    const double T = s.horizon;
    TerminalSpec out;
    out.requires_containment = s.terminal.requires_containment && project;
    out.xi = [base, per_coord, project, rp, T](std::span<const double> w, std::span<double> o) {
        base(w, o);
        Vec shifted(o.begin(), o.end());
        for (auto& v : shifted) v += per_coord;
        if (project) {
            rp.snapshot(T, w).project_to(shifted, o);
        } else {
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = shifted[i];
        }
    };
    return out;
}

json validate_scenario(const Scenario& s, const TimeGrid& grid,
                       const BrownianEnsemble& ensemble) {
    json out;

    // (H3): declared Lipschitz constants hold on sampled probes
    const double excess = driver_lipschitz_excess(s.driver, s.m, s.d, s.horizon);
    out["h3_lipschitz_excess"] = excess;
    if (excess > 0.0)
        throw ScenarioError("H3", "sampled driver probes exceed the declared (mu, lambda) by " +
                                      std::to_string(excess));

    // (H2): integral of |f(s,0,0)|^2 finite on the grid
    const double f00 = driver_zero_l2(s.driver, grid, s.m, s.d);
    out["h2_f00_l2"] = f00;
    if (!std::isfinite(f00))
        throw ScenarioError("H2", "integral of |f(s,0,0)|^2 is not finite");

    // (H4): witness containment/margin, cadlag, D_T = D_{T-}, H^2 proxy
    const region::H4Report h4 = region::validate_h4(s.region, grid, &ensemble);
    out["h4"] = {{"pass", h4.pass},
                 {"min_margin", h4.min_margin},
                 {"terminal_rho", h4.terminal_rho},
                 {"max_continuity_rho", h4.max_continuity_rho},
                 {"witness_h2", h4.h2_estimate}};
    if (!h4.pass)
        throw ScenarioError("H4", h4.what + " (path " + std::to_string(h4.first_violation_path) +
                                      ", t = " + std::to_string(h4.first_violation_time) + ")");

    // (H1): terminal in D_T per path, finite second moment
    const std::size_t N = grid.steps();
    double xi2 = 0.0, worst = 0.0;
    std::size_t worst_p = 0;
    Vec xi(s.m);
    for (std::size_t p = 0; p < ensemble.paths(); ++p) {
        s.terminal.xi(ensemble.value(p, N), xi);
        xi2 += dot(xi, xi);
        if (s.terminal.requires_containment) {
            const double dist = s.region.snapshot(s.horizon, ensemble.value(p, N)).distance(xi);
            if (dist > worst) {
                worst = dist;
                worst_p = p;
            }
        }
    }
    out["h1_xi_l2"] = std::sqrt(xi2 / double(ensemble.paths()));
    out["h1_max_violation"] = worst;
    if (worst > 1e-8)
        throw ScenarioError("H1", "terminal value leaves D_T by " + std::to_string(worst) +
                                      " (path " + std::to_string(worst_p) + ")");
    return out;
}

}  // namespace rbsde::cli
