// rbsde: scenario-driven experiments for backward SDEs reflected in
// time-dependent convex regions.
//
//   rbsde validate|run|sweep|compare|report <scenario.json>...
//       [--out DIR] [--seed U64] [--paths P] [--steps N] [--threads K]

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rbsde/runner.hpp"

using namespace rbsde;

namespace {

cli::Overrides overrides_from(std::optional<std::uint64_t> seed, std::optional<std::size_t> paths,
                              std::optional<std::size_t> steps,
                              std::optional<std::size_t> threads) {
    cli::Overrides o;
    o.seed = seed;
    o.paths = paths;
    o.steps = steps;
    o.threads = threads;
    return o;
}

int run_verb(const std::string& file, const cli::Overrides& o, const std::string& out_dir,
             bool sweep, bool cross) {
    cli::Scenario s = cli::parse_scenario(file);
    o.apply(s);
    const cli::RunArtifacts art = cli::run_scenario(s, sweep, cross);
    cli::write_outputs(art, out_dir);
    std::cout << (art.all_pass ? "PASS " : "FAIL ") << s.name << "  ->  " << out_dir
              << "/checks.csv\n";
    return art.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reflected BSDE laboratory"};
    app.require_subcommand(1);

    std::string scenario_file, out_dir = "out";
    std::vector<std::string> result_files;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths, steps, threads;

    const auto add_common = [&](CLI::App* c, bool needs_scenario) {
        if (needs_scenario)
            c->add_option("scenario", scenario_file, "scenario JSON file")->required();
        c->add_option("--out", out_dir, "output directory");
        c->add_option("--seed", seed, "override the ensemble seed");
        c->add_option("--paths", paths, "override the path count");
        c->add_option("--steps", steps, "override the base grid resolution");
        c->add_option("--threads", threads, "cap the worker count");
    };

    auto* validate = app.add_subcommand("validate", "check the standing hypotheses only");
    add_common(validate, true);
    auto* run = app.add_subcommand("run", "solve and run every configured diagnostic");
    add_common(run, true);
    auto* sweep = app.add_subcommand("sweep", "run with full convergence tables");
    add_common(sweep, true);
    auto* compare = app.add_subcommand("compare", "run both schemes and report cross distances");
    add_common(compare, true);
    auto* report = app.add_subcommand("report", "merge saved result.json files into a table");
    report->add_option("results", result_files, "result.json files")->required();
    report->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);
    const cli::Overrides o = overrides_from(seed, paths, steps, threads);

    try {
        if (validate->parsed()) {
            cli::Scenario s = cli::parse_scenario(scenario_file);
            o.apply(s);
            std::cout << cli::validate_only(s).dump(2) << "\n";
            return 0;
        }
        if (run->parsed()) return run_verb(scenario_file, o, out_dir, false, false);
        if (sweep->parsed()) return run_verb(scenario_file, o, out_dir, true, false);
        if (compare->parsed()) return run_verb(scenario_file, o, out_dir, true, true);
        if (report->parsed()) {
            std::vector<cli::json> results;
            for (const auto& f : result_files) {
                std::ifstream in(f);
                if (!in) throw Error("cannot open result file '" + f + "'");
                cli::json j;
                in >> j;
                results.push_back(std::move(j));
            }
            const std::string csv = cli::convergence_report_csv(results);
            std::filesystem::create_directories(out_dir);
            std::ofstream f(std::filesystem::path(out_dir) / "convergence.csv",
                            std::ios::binary);
            f << csv;
            std::cout << "wrote " << out_dir << "/convergence.csv\n";
            return 0;
        }
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
