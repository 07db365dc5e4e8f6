// pbcs: command-line front end.
//
//   pbcs validate  FILE
//   pbcs analyze   FILE [--grid N] [--csv PATH]
//   pbcs search    FILE [--arcs K] [--grid D] [--horizons T1,T2,...] [--no-refine] [--csv PATH] [--threads N]
//   pbcs reproduce ex2|ex4|ex5 [--json]
//
// Exit codes: 0 ok, 1 input/parse error, 2 invalid system or control,
// 3 Perron root not simple, 4 search budget exceeded, 5 reproduction mismatch.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbcs/io.hpp"
#include "pbcs/pbcs.hpp"
#include "pbcs/reproduce.hpp"

namespace {

using pbcs::io::json;

enum Exit : int {
    ok = 0,
    input_failure = 1,
    invalid = 2,
    not_simple = 3,
    budget = 4,
    mismatch = 5,
};

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

int fail(int code, const std::string& kind, const std::string& message) {
    emit({{"error", kind}, {"message", message}});
    std::cerr << "pbcs: " << message << '\n';
    return code;
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const pbcs::input_error& e) {
        return fail(input_failure, "input", e.what());
    } catch (const pbcs::invalid_system_error& e) {
        return fail(invalid, "invalid_system", e.what());
    } catch (const pbcs::invalid_control_error& e) {
        return fail(invalid, "invalid_control", e.what());
    } catch (const pbcs::not_simple_error& e) {
        return fail(not_simple, "not_simple",
                    std::string(e.what()) +
                        " (the maximum principle assumes the spectral radius of C(T) is a simple eigenvalue)");
    } catch (const pbcs::budget_exceeded_error& e) {
        return fail(budget, "budget_exceeded", e.what());
    } catch (const pbcs::error& e) {
        return fail(input_failure, "error", e.what());
    }
}

int cmd_validate(const std::string& path) {
    return guarded([&] {
        const json doc = pbcs::io::read_json_file(path);
        const auto sys = pbcs::io::system_from_json(doc);
        const auto report = pbcs::validate(sys);
        json out{{"system", pbcs::io::to_json(report)}};
        bool control_ok = true;
        if (doc.contains("control")) {
            try {
                (void)pbcs::io::control_from_json(doc["control"], sys.horizon);
                out["control"] = {{"valid", true}};
            } catch (const pbcs::invalid_control_error& e) {
                control_ok = false;
                out["control"] = {{"valid", false}, {"problem", e.what()}};
            }
        }
        out["valid"] = report.valid() && control_ok;
        emit(out);
        return report.valid() && control_ok ? ok : invalid;
    });
}

int cmd_analyze(const std::string& path, std::size_t grid_samples, const std::string& csv) {
    return guarded([&] {
        const auto problem = pbcs::io::problem_from_json(pbcs::io::read_json_file(path));
        const auto& sys = problem.system;
        pbcs::require_valid(sys);
        if (!problem.control) throw pbcs::input_error("analyze needs a \"control\" entry");
        pbcs::Control u = *problem.control;
        if (const auto* pw = std::get_if<pbcs::PiecewiseConstantControl>(&u)) {
            const auto& vals = pw->values();
            const bool bang = std::all_of(vals.begin(), vals.end(), [](double x) { return x == 1.0 || x == -1.0; });
            if (bang) u = pbcs::to_bang_bang(*pw);
        }
        pbcs::require_compatible(sys, u);

        const auto grid = pbcs::default_grid(u, grid_samples);
        const auto rep = pbcs::check_first_order(sys, u, grid);
        json out{{"system", pbcs::io::to_json(sys)},
                 {"control", pbcs::io::to_json(u)},
                 {"perron", pbcs::io::to_json(pbcs::perron_pair(pbcs::transition_matrix(sys, u)))},
                 {"first_order", pbcs::io::to_json(rep)}};

        const auto arc_list = pbcs::arcs(u);
        const bool singular = arc_list.size() == 1 && arc_list.front().value == 0.0;
        if (singular) {
            out["singular_test"] = pbcs::io::to_json(pbcs::singular_test(sys));
        } else if (const auto* bb = std::get_if<pbcs::BangBangControl>(&u); bb && bb->arc_count() >= 2) {
            const auto d = pbcs::build_H(sys, *bb);
            out["arcs"] = pbcs::io::to_json(d);
            out["second_order"] = pbcs::io::to_json(pbcs::second_order_test(d));
        }
        if (!csv.empty()) {
            pbcs::io::write_text_file(csv, pbcs::io::switching_csv(rep.samples));
            out["csv"] = csv;
        }
        emit(out);
        return ok;
    });
}

std::uint64_t budget_from_env() {
    const char* env = std::getenv("PBCS_EVAL_BUDGET");
    if (env == nullptr || *env == '\0') return pbcs::default_eval_budget;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw pbcs::input_error(std::string("PBCS_EVAL_BUDGET is not a nonnegative integer: ") + env);
    }
}

int cmd_search(const std::string& path, std::size_t arcs, std::size_t density, std::vector<double> horizons,
               bool do_refine, const std::string& csv, unsigned threads) {
    return guarded([&] {
        const auto problem = pbcs::io::problem_from_json(pbcs::io::read_json_file(path));
        const auto& sys = problem.system;
        pbcs::require_valid(sys);
        pbcs::SearchOptions opt;
        opt.budget = budget_from_env();
        opt.threads = threads;
        if (horizons.empty()) horizons.push_back(sys.horizon);

        const auto verdict = pbcs::rho_t_curve(sys, horizons, arcs, density, opt);
        json out{{"arcs", arcs}, {"grid", density}, {"budget", opt.budget}, {"gas", pbcs::io::to_json(verdict)}};

        // Grid optimum (and its local polish) at the largest ratio rho^(1/t).
        std::size_t best = 0;
        for (std::size_t i = 1; i < verdict.curve.size(); ++i)
            if (verdict.curve[i].rate > verdict.curve[best].rate) best = i;
        const auto& pick = verdict.curve[best];
        const auto at = sys.with_horizon(pick.horizon);
        pbcs::SearchResult grid_best;
        grid_best.best_control = pick.control;
        grid_best.best_rho = pick.rho;
        grid_best.evaluations = static_cast<std::uint64_t>(pbcs::grid_size(arcs, density));
        grid_best.trace = {pick.rho};
        out["search"] = pbcs::io::to_json(grid_best);
        if (do_refine) out["refined"] = pbcs::io::to_json(pbcs::refine(at, pick.control));
        if (!csv.empty()) {
            pbcs::io::write_text_file(csv, pbcs::io::rho_t_csv(verdict));
            out["csv"] = csv;
        }
        emit(out);
        return ok;
    });
}

int cmd_reproduce(const std::string& id, bool as_json) {
    return guarded([&] {
        const auto checks = pbcs::reproduce::run(id);
        bool all = true;
        for (const auto& c : checks) all = all && c.passed;
        if (as_json) {
            json rows = json::array();
            for (const auto& c : checks) {
                rows.push_back({{"check", c.name},
                                {"value", c.value},
                                {"expected", c.expected},
                                {"tolerance", c.tolerance},
                                {"passed", c.passed}});
            }
            emit({{"example", id}, {"checks", rows}, {"passed", all}});
        } else {
            for (const auto& c : checks) {
                std::printf("%-4s  %-42s  value %-24s expected %-24s tol %.3g\n", c.passed ? "PASS" : "FAIL",
                            c.name.c_str(), pbcs::io::format_number(c.value).c_str(),
                            pbcs::io::format_number(c.expected).c_str(), c.tolerance);
            }
            std::printf("%s: %s\n", id.c_str(), all ? "all checks passed" : "MISMATCH");
        }
        return all ? ok : mismatch;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimality tests and destabilizing-control search for positive bilinear control systems"};
    app.require_subcommand(1);

    std::string path;
    auto* validate = app.add_subcommand("validate", "Check that a system file describes a positive bilinear system");
    validate->add_option("input", path, "System JSON file")->required();

    std::size_t grid_samples = pbcs::default_grid_samples;
    std::string csv;
    auto* analyze = app.add_subcommand("analyze", "Run maximum-principle tests on the control in a system file");
    analyze->add_option("input", path, "System JSON file with a control")->required();
    analyze->add_option("--grid", grid_samples, "Uniform samples of the switching function")
        ->check(CLI::Range(std::size_t{2}, std::size_t{100'000'000}));
    analyze->add_option("--csv", csv, "Write m(t) samples to this CSV file");

    std::size_t arcs = 2;
    std::size_t density = 8;
    std::vector<double> horizons;
    bool no_refine = false;
    unsigned threads = 0;
    auto* search = app.add_subcommand("search", "Grid search for bang-bang controls maximizing the spectral radius");
    search->add_option("input", path, "System JSON file")->required();
    search->add_option("--arcs", arcs, "Maximum number of arcs")->check(CLI::PositiveNumber);
    search->add_option("--grid", density, "Arc durations are multiples of T/grid")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1'000'000}));
    search->add_option("--horizons", horizons, "Horizons for the rho_t curve (default: T)")->delimiter(',');
    search->add_flag("--no-refine", no_refine, "Skip local refinement of the grid optimum");
    search->add_option("--csv", csv, "Write the (t, rho, rho^(1/t)) curve to this CSV file");
    search->add_option("--threads", threads, "Worker threads (0: all cores)");

    std::string example;
    bool as_json = false;
    auto* reproduce = app.add_subcommand("reproduce", "Re-run a built-in worked example and compare with known values");
    reproduce->add_option("example", example, "ex2, ex4 or ex5")->required()->check(CLI::IsMember({"ex2", "ex4", "ex5"}));
    reproduce->add_flag("--json", as_json, "Print the checks as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : input_failure;
    }

    if (*validate) return cmd_validate(path);
    if (*analyze) return cmd_analyze(path, grid_samples, csv);
    if (*search) return cmd_search(path, arcs, density, horizons, !no_refine, csv, threads);
    return cmd_reproduce(example, as_json);
}
