#include "rbsde/runner.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "rbsde/parallel.hpp"

namespace rbsde::cli {

namespace {

// FNV-1a over the solution arrays; a cheap reproducibility fingerprint.
std::uint64_t digest(const SolutionEnsemble& s) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](const std::vector<std::vector<double>>& blocks) {
        for (const auto& b : blocks)
            for (double v : b) {
                std::uint64_t bits;
                static_assert(sizeof(bits) == sizeof(v));
                std::memcpy(&bits, &v, sizeof(bits));
                for (int i = 0; i < 8; ++i) {
                    h ^= (bits >> (8 * i)) & 0xFF;
                    h *= 1099511628211ULL;
                }
            }
    };
    mix(s.y);
    mix(s.z);
    mix(s.kc_inc);
    mix(s.kd_atom);
    return h;
}

json report_to_json(const SolverReport& r) {
    return {{"scheme", r.scheme},
            {"parameter", r.parameter},
            {"backend", r.backend},
            {"grid_steps", r.grid_steps},
            {"states", r.states},
            {"wall_ms", r.wall_ms},
            {"containment_max", r.containment_max},
            {"k_variation_mean", r.k_variation_mean},
            {"k_variation_max", r.k_variation_max},
            {"terminal_projection_max", r.terminal_projection_max},
            {"penalty_iter_max", r.penalty_iter_max}};
}

json check_to_json(const verify::DiagnosticReport& c) {
    json j{{"name", c.name},
           {"statistic", c.statistic},
           {"threshold", c.threshold},
           {"pass", c.pass},
           {"worst_path", c.worst_path},
           {"worst_time", c.worst_time}};
    if (!c.extras.empty()) j["extras"] = c.extras;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

struct CsvBuilder {
    std::string text;

    void header(const std::string& cols) { text = cols + "\r\n"; }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text += ',';
            // RFC-4180: quote when a cell holds a comma, quote or newline
            const std::string& c = cells[i];
            if (c.find_first_of(",\"\n\r") != std::string::npos) {
                text += '"';
                for (char ch : c) {
                    if (ch == '"') text += '"';
                    text += ch;
                }
                text += '"';
            } else {
                text += c;
            }
        }
        text += "\r\n";
    }
};

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json Overrides::to_json() const {
    json j = json::object();
    if (seed) j["seed"] = *seed;
    if (paths) j["paths"] = *paths;
    if (steps) j["steps"] = *steps;
    if (threads) j["threads"] = *threads;
    return j;
}

void Overrides::apply(Scenario& s) const {
    if (seed) {
        s.seed = *seed;
        s.resolved["ensemble"]["seed"] = *seed;
    }
    if (paths) {
        s.paths = *paths;
        s.resolved["ensemble"]["paths"] = *paths;
    }
    if (steps) {
        s.steps = *steps;
        s.resolved["grid"]["steps"] = *steps;
    }
    if (threads) thread_cap() = *threads;
    s.resolved["overrides"] = to_json();
}

Workbench Workbench::prepare(const Scenario& s, bool with_half) {
    Workbench w;
    std::vector<double> required = s.region.jump_times;
    for (std::size_t j : s.scheme.piecewise) {
        const auto disc = region::discretize(s.region, j);
        required.insert(required.end(), disc.times.begin(), disc.times.end());
    }
    w.grid = TimeGrid::build(s.horizon, s.steps, required);
    w.ensemble = BrownianEnsemble::generate(s.seed, w.grid, s.d, s.paths);

    const auto make_backend = [&s](const BrownianEnsemble& ens) -> std::unique_ptr<CondExpBackend> {
        if (s.backend.type == "tree") return std::make_unique<TreeBackend>(ens.grid(), ens.dim());
        FeatureHook hook;
        if (s.region.state_dependent) {
            // adapted regions: add the signed distance of the origin probe
            // to the region boundary as a regression feature
            const region::RegionPath rp = s.region;
            const BrownianEnsemble* ep = &ens;
            hook.extra = 1;
            hook.fill = [rp, ep](std::size_t k, std::size_t p, std::span<double> out) {
                const double t = ep->grid().time(k);
                const geom::ConvexSet d = rp.snapshot(t, ep->value(p, k));
                const Vec origin(rp.dim, 0.0);
                const double dist = d.distance(origin);
                out[0] = dist > 1e-12 ? -dist : d.boundary_distance(origin);
            };
        }
        return std::make_unique<RegressionBackend>(ens, s.backend.degree, std::move(hook));
    };
    w.backend = make_backend(w.ensemble);
    if (with_half && s.paths >= 2) {
        try {
            w.half_ensemble =
                std::make_unique<BrownianEnsemble>(BrownianEnsemble::generate(
                    s.seed, w.grid, s.d, s.paths / 2));
            w.half_backend = make_backend(*w.half_ensemble);
        } catch (const EngineError&) {
            w.half_ensemble.reset();  // too few paths for the basis; skip
            w.half_backend.reset();
        }
    }
    return w;
}

RunArtifacts run_scenario(const Scenario& s, bool sweep_tables, bool cross_compare) {
    RunArtifacts art;
    Workbench wb = Workbench::prepare(s, s.checks.apriori);
    wb.validation = validate_scenario(s, wb.grid, wb.ensemble);

    CsvBuilder checks;
    checks.header(
        "scenario,scheme,parameter,check,statistic,threshold,pass,worst_path,worst_time,"
        "schema_version");
    CsvBuilder conv;
    conv.header(
        "scenario,scheme,parameter,prev_parameter,delta_y,delta_z,delta_k,rate_y,containment,"
        "skorokhod_excess,schema_version");

    const auto check_row = [&](const std::string& scheme, double param,
                               const verify::DiagnosticReport& c) {
        checks.row({s.name, scheme, format_double(param), c.name, format_double(c.statistic),
                    format_double(c.threshold), c.pass ? "true" : "false",
                    std::to_string(c.worst_path), format_double(c.worst_time),
                    kCsvSchemaVersion});
        art.all_pass = art.all_pass && c.pass;
    };

    solver::SolveContext ctx{&s.region, &s.driver, &s.terminal, wb.backend.get(), s.m};
    const double witness_h2 = wb.validation["h4"]["witness_h2"].get<double>();

    json schemes = json::object();
    struct SchemeRun {
        std::string name;
        solver::SchemeKind kind;
        const std::vector<std::size_t>* params;
    };
    std::vector<SchemeRun> order;
    if (!s.scheme.penalized.empty())
        order.push_back({"penalized", solver::SchemeKind::penalized, &s.scheme.penalized});
    if (!s.scheme.piecewise.empty())
        order.push_back({"piecewise", solver::SchemeKind::piecewise, &s.scheme.piecewise});

    std::vector<solver::SolveOutput> finals(order.size());
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const auto& sr = order[oi];
        json runs = json::array();
        std::vector<double> containments, sk_excess;

        const auto per_run = [&](std::size_t param, const solver::SolveOutput& out) {
            json rj;
            rj["parameter"] = param;
            rj["report"] = report_to_json(out.report);
            rj["digest"] = digest(out.sol);
            json cj = json::array();

            region::DiscretizedRegion disc;
            const bool pw = sr.kind == solver::SchemeKind::piecewise;
            if (pw) disc = region::discretize(s.region, param);
            const double cont_threshold =
                pw ? 1e-10 : s.checks.containment_c / double(param);
            auto c1 = verify::check_containment(out.sol, s.region, *wb.backend, cont_threshold,
                                                pw ? &disc : nullptr);
            auto c2 = verify::check_skorokhod(out.sol, s.region, *wb.backend,
                                              s.checks.skorokhod_processes);
            auto c3 = verify::check_inward_inequality(out.sol, s.region, *wb.backend);
            auto c4 = verify::check_equation_residual(out.sol, *wb.backend);
            for (const auto* c : {&c1, &c2, &c3, &c4}) {
                check_row(sr.name, double(param), *c);
                cj.push_back(check_to_json(*c));
            }
            if (!s.region.jump_times.empty()) {
                auto c5 = verify::check_jump_projection(out.sol, s.region, *wb.backend);
                check_row(sr.name, double(param), c5);
                cj.push_back(check_to_json(c5));
            }
            containments.push_back(c1.statistic);
            sk_excess.push_back(c2.extras.at("worst_excess"));
            rj["checks"] = std::move(cj);
            runs.push_back(std::move(rj));
        };

        solver::SweepResult sw = solver::convergence_sweep(
            ctx, sr.kind, std::span<const std::size_t>(*sr.params), per_run);

        // a priori energy bound on the final parameter, with the half-path rerun
        {
            const auto ap = verify::check_apriori(sw.final_run.sol, s.region, *wb.backend,
                                                  s.driver, witness_h2);
            check_row(sr.name, sw.parameters.back(), ap);
            runs.back()["checks"].push_back(check_to_json(ap));
            if (s.checks.apriori && wb.half_backend) {
                solver::SolveContext hctx = ctx;
                hctx.backend = wb.half_backend.get();
                solver::SolveOutput half =
                    sr.kind == solver::SchemeKind::penalized
                        ? solver::solve_penalized(hctx, sr.params->back())
                        : solver::solve_piecewise(
                              hctx, region::discretize(s.region, sr.params->back()));
                const auto aph = verify::check_apriori(half.sol, s.region, *wb.half_backend,
                                                       s.driver, witness_h2);
                const auto cmp = verify::compare_apriori(ap, aph);
                check_row(sr.name, sw.parameters.back(), cmp);
                runs.back()["checks"].push_back(check_to_json(cmp));
            }
        }

        // terminal-perturbation stability sweep on the final parameter
        if (!s.checks.stability_deltas.empty()) {
            std::vector<double> ratios;
            for (double delta : s.checks.stability_deltas) {
                Scenario pert = s;
                pert.terminal = perturb_terminal(s, delta, true);
                solver::SolveContext pctx = ctx;
                pctx.terminal = &pert.terminal;
                solver::SolveOutput pout =
                    sr.kind == solver::SchemeKind::penalized
                        ? solver::solve_penalized(pctx, sr.params->back())
                        : solver::solve_piecewise(
                              pctx, region::discretize(s.region, sr.params->back()));
                auto st = verify::check_stability(sw.final_run.sol, pout.sol, s.region,
                                                  *wb.backend, 2.0);
                st.name = "stability[" + format_double(delta) + "]";
                check_row(sr.name, sw.parameters.back(), st);
                runs.back()["checks"].push_back(check_to_json(st));
                ratios.push_back(st.statistic);
            }
            if (ratios.size() >= 2) {
                verify::DiagnosticReport drift;
                drift.name = "stability_drift";
                drift.threshold = 2.0;
                drift.statistic = 0.0;
                for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
                    const double a = ratios[i], b = ratios[i + 1];
                    if (a > 0.0 && b > 0.0)
                        drift.statistic = std::max(drift.statistic, std::max(a / b, b / a));
                }
                drift.pass = drift.statistic <= drift.threshold;
                drift.note = "max ratio drift across perturbation sizes";
                check_row(sr.name, sw.parameters.back(), drift);
                runs.back()["checks"].push_back(check_to_json(drift));
            }
        }

        json sj;
        sj["parameters"] = *sr.params;
        sj["runs"] = std::move(runs);
        if (sweep_tables || sr.params->size() > 1) {
            json steps = json::array();
            for (std::size_t i = 0; i < sw.parameters.size(); ++i) {
                json row;
                row["parameter"] = sw.parameters[i];
                row["containment"] = containments[i];
                row["skorokhod_excess"] = sk_excess[i];
                std::string prev, dy, dz, dk, rate;
                if (i >= 1) {
                    const auto& st = sw.steps[i - 1];
                    prev = format_double(st.param_lo);
                    dy = format_double(st.dist.dy);
                    dz = format_double(st.dist.dz);
                    dk = format_double(st.dist.dk);
                    row["delta_y"] = st.dist.dy;
                    row["delta_z"] = st.dist.dz;
                    row["delta_k"] = st.dist.dk;
                    if (i >= 2 && st.dist.dy > 0.0) {
                        const double r = std::log2(sw.steps[i - 2].dist.dy / st.dist.dy);
                        rate = format_double(r);
                        row["rate_y"] = r;
                    }
                }
                steps.push_back(row);
                conv.row({s.name, sr.name, format_double(sw.parameters[i]), prev, dy, dz, dk,
                          rate, format_double(containments[i]), format_double(sk_excess[i]),
                          kCsvSchemaVersion});
            }
            sj["table"] = std::move(steps);
            sj["decreasing_y"] = sw.decreasing_y;
        }
        schemes[sr.name] = std::move(sj);
        finals[oi] = std::move(sw.final_run);
    }

    json cross = json::object();
    if (cross_compare && finals.size() == 2) {
        const SolutionDistance d = solution_distance(finals[0].sol, finals[1].sol);
        cross["penalized_parameter"] = finals[0].sol.parameter;
        cross["piecewise_parameter"] = finals[1].sol.parameter;
        cross["delta_y"] = d.dy;
        cross["delta_z"] = d.dz;
        cross["delta_k"] = d.dk;
        conv.row({s.name, "cross", format_double(finals[1].sol.parameter),
                  format_double(finals[0].sol.parameter), format_double(d.dy),
                  format_double(d.dz), format_double(d.dk), "", "", "", kCsvSchemaVersion});
    }

    art.result["schema_version"] = 1;
    art.result["scenario"] = s.resolved;
    art.result["validation"] = wb.validation;
    art.result["schemes"] = std::move(schemes);
    if (!cross.empty()) art.result["cross"] = std::move(cross);
    art.result["all_pass"] = art.all_pass;
    art.checks_csv = std::move(checks.text);
    art.convergence_csv = std::move(conv.text);
    return art;
}

json validate_only(const Scenario& s) {
    Workbench wb = Workbench::prepare(s, false);
    json out;
    out["scenario"] = s.resolved;
    out["validation"] = validate_scenario(s, wb.grid, wb.ensemble);
    return out;
}

std::string convergence_report_csv(const std::vector<json>& results) {
    if (results.size() < 1) throw Error("convergence report needs at least one result");
    CsvBuilder conv;
    conv.header(
        "result,scenario,scheme,parameter,delta_y,delta_z,delta_k,rate_y,containment,"
        "skorokhod_excess,digest_matches_first,schema_version");
    std::map<std::string, std::uint64_t> first_digest;  // scheme:param -> digest
    for (std::size_t r = 0; r < results.size(); ++r) {
        const json& res = results[r];
        const std::string scen = res.at("scenario").value("name", "unnamed");
        if (!res.contains("schemes")) continue;
        for (const auto& [scheme, sj] : res.at("schemes").items()) {
            for (const auto& run : sj.at("runs")) {
                const double param = run.at("parameter").get<double>();
                const std::string key = scheme + ":" + format_double(param);
                const std::uint64_t dg = run.value("digest", std::uint64_t(0));
                std::string match;
                if (!first_digest.count(key))
                    first_digest[key] = dg;
                match = first_digest[key] == dg ? "true" : "false";
                std::string dy, dz, dk, rate, cont, sk;
                if (sj.contains("table")) {
                    for (const auto& row : sj.at("table")) {
                        if (row.at("parameter").get<double>() != param) continue;
                        if (row.contains("delta_y")) {
                            dy = format_double(row.at("delta_y").get<double>());
                            dz = format_double(row.at("delta_z").get<double>());
                            dk = format_double(row.at("delta_k").get<double>());
                        }
                        if (row.contains("rate_y"))
                            rate = format_double(row.at("rate_y").get<double>());
                        cont = format_double(row.at("containment").get<double>());
                        sk = format_double(row.at("skorokhod_excess").get<double>());
                    }
                }
                conv.row({"r" + std::to_string(r), scen, scheme, format_double(param), dy, dz,
                          dk, rate, cont, sk, match, kCsvSchemaVersion});
            }
        }
    }
    return conv.text;
}

void write_outputs(const RunArtifacts& a, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "result.json", std::ios::binary);
        f << a.result.dump(2) << "\n";
    }
    {
        std::ofstream f(fs::path(out_dir) / "checks.csv", std::ios::binary);
        f << a.checks_csv;
    }
    if (!a.convergence_csv.empty()) {
        std::ofstream f(fs::path(out_dir) / "convergence.csv", std::ios::binary);
        f << a.convergence_csv;
    }
}

}  // namespace rbsde::cli
