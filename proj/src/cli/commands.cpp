#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvpi/cli.hpp"
#include "mvpi/errors.hpp"
#include "mvpi/io.hpp"
#include "mvpi/models.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/scenarios.hpp"

namespace mvpi::cli {

namespace {

std::string fmt(double v, int digits = 3) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "-"; }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::optional<GroundTruth> oracle_truth(const TotalCostModel& model) {
    GroundTruth t;
    t.J = optimal_cost_oracle(model);
    if (!model.has_families()) t.Q = h_backup(model, t.J);
    return t;
}

/// Settings shared by solve and compare.
struct RunFlags {
    std::string model_path;
    std::string algorithm = "mixed";
    std::string j0 = "zero";
    std::string q0;
    std::string mu0;
    std::string nk = "10";
    double epsilon = 0.0;
    std::string b_strategy = "full";
    double tolerance = 0.0;
    std::size_t max_iterations = 10000;
    std::string clamp_lo;
    std::string clamp_hi;
    std::string mask_schedule = "none";
    std::string trace_out;
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool oracle = false;
    bool lenient = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_algorithm) {
    cmd->add_option("model", f.model_path, "Model file, or fixture:<name>")->required();
    if (with_algorithm)
        cmd->add_option("--algorithm,-a", f.algorithm, "vi, pi, mpi, mixed or lp-variant")->capture_default_str();
    cmd->add_option("--j0", f.j0, "zero, inf, cJstar:<c> or file:<path>")->capture_default_str();
    cmd->add_option("--q0", f.q0, "h, zero, inf, cQstar:<c> or file:<path> (default h)");
    cmd->add_option("--mu0", f.mu0, "Initial policy as control indices, e.g. 0,1,0");
    cmd->add_option("--nk", f.nk, "Inner steps: n, n1,n2,... or exact")->capture_default_str();
    cmd->add_option("--epsilon", f.epsilon, "Greedy slack")->capture_default_str();
    cmd->add_option("--bstrategy", f.b_strategy, "full, empty, occupation[:beta[:threshold]] or subsets:<l>;<l>")
        ->capture_default_str();
    cmd->add_option("--tol", f.tolerance, "Stopping tolerance (default MVPI_TOL or 1e-10)");
    cmd->add_option("--max-iter", f.max_iterations, "Iteration cap")->capture_default_str();
    cmd->add_option("--clamp-lo", f.clamp_lo, "Lower clamp: a number or file:<path>");
    cmd->add_option("--clamp-hi", f.clamp_hi, "Upper clamp: a number or file:<path>");
    cmd->add_option("--mask-schedule", f.mask_schedule, "none, round-robin or by-state")->capture_default_str();
    cmd->add_option("--trace-out", f.trace_out, "Trace file (compare: prefix)");
    cmd->add_option("--format", f.format, "csv or json")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Seed recorded in the trace header")->capture_default_str();
    cmd->add_flag("--oracle", f.oracle, "Compute J* by the oracle when the file has no ground truth");
    cmd->add_flag("--lenient", f.lenient, "Warn on unknown fields instead of rejecting them");
}

struct Prepared {
    LoadedModel loaded;
    SolverConfig config;
    TraceFormat format = TraceFormat::csv;
};

Prepared prepare(const RunFlags& f, std::ostream& out) {
    Prepared p;
    p.loaded = load_model(f.model_path, !f.lenient);
    const auto& model = p.loaded.model;
    const auto report = validate_model(model);
    if (!report.ok()) throw ModelError("invalid model:\n" + report.to_string());
    if (!p.loaded.truth && (f.oracle || f.j0.rfind("cJstar:", 0) == 0 || f.q0.rfind("cQstar:", 0) == 0)) {
        p.loaded.truth = oracle_truth(model);
        out << "ground truth: computed by the oracle\n";
    }
    p.format = parse_trace_format(f.format);
    auto& cfg = p.config;
    cfg.algorithm = parse_algorithm(f.algorithm);
    cfg.j0 = parse_j0(f.j0, model, p.loaded.truth);
    if (!f.q0.empty()) cfg.q0 = parse_q0(f.q0, model, *cfg.j0, p.loaded.truth);
    if (!f.mu0.empty()) cfg.mu0 = parse_policy(f.mu0, model);
    cfg.nk = NkSchedule::parse(f.nk);
    cfg.epsilon = f.epsilon;
    cfg.b_strategy = parse_b_strategy(f.b_strategy, model);
    cfg.tolerance = f.tolerance > 0.0 ? f.tolerance : default_tolerance();
    cfg.max_iterations = f.max_iterations;
    if (!f.clamp_lo.empty()) cfg.clamp_lo = parse_bound(f.clamp_lo, model);
    if (!f.clamp_hi.empty()) cfg.clamp_hi = parse_bound(f.clamp_hi, model);
    cfg.async = parse_mask_schedule(f.mask_schedule, model);
    cfg.ground_truth = p.loaded.truth;
    cfg.seed = f.seed;
    return p;
}

std::string model_line(const LoadedModel& m) {
    return "model: " + m.source + " (regime " + regime_letter(m.model.regime()) + ", " +
           std::to_string(m.model.num_states()) + " states, " + std::to_string(m.model.num_pairs()) +
           " pairs, fingerprint " + model_fingerprint(m.model) + ")\n";
}

std::vector<std::string> limit_notes(const ValueVector& J, const std::optional<GroundTruth>& truth) {
    std::vector<std::string> notes;
    if (!truth || truth->J.size() != J.size()) return notes;
    for (std::size_t x = 0; x < J.size(); ++x) {
        const ExtReal a = J[x], b = truth->J[x];
        const bool same = a == b || (a.is_finite() && b.is_finite() && std::fabs(a.value() - b.value()) <= 1e-8);
        if (!same)
            notes.push_back("J_inf != J* at state " + std::to_string(x) + " (J_inf = " + to_string(a) +
                            ", J* = " + to_string(b) + ")");
    }
    return notes;
}

void write_trace(const std::string& path, SolverRun& run, const SolverConfig& cfg, TraceFormat format,
                 std::ostream& out) {
    run.trace.seed = cfg.seed;
    write_trace_file(path, run.trace, format);
    out << "trace: " << path << " (" << (format == TraceFormat::csv ? "csv" : "json") << ", " << run.trace.size()
        << " rows)\n";
}

int cmd_validate(const std::string& path, bool lenient, std::ostream& out, std::ostream& err) {
    LoadedModel loaded;
    try {
        loaded = load_model(path, !lenient);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    ModelDocument doc;
    if (path.rfind("fixture:", 0) != 0) doc = read_model_file(path, ParseOptions{!lenient});
    for (const auto& w : doc.warnings) err << "warning: " << w << "\n";
    const auto report = validate_model(loaded.model);
    out << model_line(loaded);
    if (!report.ok()) {
        out << report.to_string();
        return exit_check_failed;
    }
    out << "ok" << (loaded.truth ? " (ground truth present)" : "") << "\n";
    return exit_ok;
}

int cmd_solve(const RunFlags& f, std::ostream& out, std::ostream& err) {
    Prepared p;
    try {
        p = prepare(f, out);
        validate_config(p.loaded.model, p.config);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    const auto& model = p.loaded.model;
    out << model_line(p.loaded);
    SolverRun run;
    try {
        run = solve(model, p.config);
    } catch (const ConvergenceError& e) {
        out << "no convergence: " << e.what() << "\n";
        out << "last iterate: " << to_string(ValueVector(e.last_iterate())) << "\n";
        out << "unreached limit: " << to_string(e.direction()) << ", last residual " << fmt(e.last_residual())
            << "\n";
        return exit_check_failed;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_check_failed;
    }
    out << render_summary({summarize(run, p.loaded.truth)});
    out << "J = " << to_string(run.final_J()) << "\n";
    if (!run.Q.empty()) out << "Q = " << to_string(run.Q.back()) << "\n";
    if (!run.policies.empty()) out << "policy: " << run.policies.back().describe() << "\n";
    const auto report = verify_certificates(model, run, p.loaded.truth);
    out << "certificates:\n" << report.to_string();
    for (const auto& n : limit_notes(run.final_J(), p.loaded.truth)) out << "note: " << n << "\n";
    if (!f.trace_out.empty()) write_trace(f.trace_out, run, p.config, p.format, out);
    return run.converged() && report.all_passed() ? exit_ok : exit_check_failed;
}

int cmd_compare(RunFlags f, const std::string& algorithms, std::ostream& out, std::ostream& err) {
    const auto names = split_list(algorithms);
    if (names.empty()) {
        err << "error: --algorithms is empty\n";
        return exit_usage;
    }
    std::vector<Prepared> prepared;
    try {
        for (const auto& name : names) {
            f.algorithm = name;
            std::ostringstream sink;
            prepared.push_back(prepare(f, prepared.empty() ? out : sink));
            validate_config(prepared.back().loaded.model, prepared.back().config);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    out << model_line(prepared.front().loaded);
    std::vector<SummaryRow> rows;
    for (auto& p : prepared) {
        try {
            SolverRun run = solve(p.loaded.model, p.config);
            rows.push_back(summarize(run, p.loaded.truth));
            if (!f.trace_out.empty()) {
                const std::string ext = p.format == TraceFormat::csv ? ".csv" : ".json";
                write_trace(f.trace_out + "." + to_string(p.config.algorithm) + ext, run, p.config, p.format, out);
            }
        } catch (const ConvergenceError& e) {
            SummaryRow row;
            row.algorithm = to_string(p.config.algorithm);
            row.termination = "cap";
            row.residual = e.last_residual();
            rows.push_back(row);
        } catch (const Error& e) {
            err << "error: " << to_string(p.config.algorithm) << ": " << e.what() << "\n";
            return exit_check_failed;
        }
    }
    out << render_summary(rows);
    return exit_ok;
}

struct BenchFlags {
    std::string suite = "default";
    std::string seeds = "1,2,3";
    std::string sizes = "10,20,50,100,200";
    std::string algorithms = "vi,mpi,mixed";
    std::string format = "csv";
    std::string out_path;
};

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
    std::vector<Regime> regimes;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> sizes;
    std::vector<Algorithm> algorithms;
    TraceFormat format;
    try {
        if (f.suite == "default") {
            regimes = {Regime::discounted, Regime::nonnegative};
        } else {
            for (const auto& r : split_list(f.suite)) regimes.push_back(parse_regime(r));
        }
        for (const auto& s : split_list(f.seeds)) seeds.push_back(std::stoull(s));
        for (const auto& s : split_list(f.sizes)) sizes.push_back(std::stoul(s));
        for (const auto& a : split_list(f.algorithms)) algorithms.push_back(parse_algorithm(a));
        format = parse_trace_format(f.format);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    if (regimes.empty() || seeds.empty() || sizes.empty() || algorithms.empty()) {
        err << "error: empty suite, seed, size or algorithm list\n";
        return exit_usage;
    }

    nlohmann::json rows = nlohmann::json::array();
    const auto start = std::chrono::steady_clock::now();
    for (Regime regime : regimes) {
        for (std::size_t size : sizes) {
            for (std::uint64_t seed : seeds) {
                RandomModelParams params;
                params.regime = regime;
                params.num_states = size;
                const auto rm = random_model(seed, params);
                for (Algorithm a : algorithms) {
                    SolverConfig cfg;
                    cfg.algorithm = a;
                    cfg.tolerance = 1e-9;
                    cfg.max_iterations = 100000;
                    cfg.track_vi_bound = false;
                    nlohmann::json row = {{"regime", std::string(1, regime_letter(regime))},
                                          {"states", size},
                                          {"seed", seed},
                                          {"algorithm", to_string(a)}};
                    const auto t0 = std::chrono::steady_clock::now();
                    try {
                        validate_config(rm.model, cfg);
                        const SolverRun run = solve(rm.model, cfg);
                        row["termination"] = to_string(run.termination);
                        row["iterations"] = run.iterations();
                        row["bellman"] = run.counts.bellman;
                        row["policy_backup"] = run.counts.policy_backup;
                        row["f_theta"] = run.counts.f_theta;
                        row["linear_solve"] = run.counts.linear_solve;
                        row["lp_sweep"] = run.counts.lp_sweep;
                        row["operator_total"] = run.counts.total();
                    } catch (const Error& e) {
                        row["termination"] = std::string("error: ") + e.what();
                    }
                    row["wall_ms"] = elapsed_ms(t0);
                    rows.push_back(std::move(row));
                }
            }
        }
    }

    std::string text;
    if (format == TraceFormat::json) {
        text = rows.dump(2) + "\n";
    } else {
        static const char* cols[] = {"regime",        "states",   "seed",         "algorithm",
                                     "termination",   "iterations", "bellman",    "policy_backup",
                                     "f_theta",       "linear_solve", "lp_sweep", "operator_total",
                                     "wall_ms"};
        for (std::size_t i = 0; i < std::size(cols); ++i) text += std::string(i ? "," : "") + cols[i];
        text += "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < std::size(cols); ++i) {
                if (i) text += ",";
                if (!row.contains(cols[i])) continue;
                const auto& v = row[cols[i]];
                text += v.is_string() ? v.get<std::string>() : v.is_number_float() ? fmt(v.get<double>(), 6) : v.dump();
            }
            text += "\n";
        }
    }
    if (f.out_path.empty()) {
        out << text;
    } else {
        write_text_file(f.out_path, text);
        out << rows.size() << " runs in " << fmt(elapsed_ms(start) / 1000.0) << " s, written to " << f.out_path
            << "\n";
    }
    return exit_ok;
}

int cmd_reproduce(const std::vector<std::string>& requested, const ScenarioOptions& options, bool quiet,
                  std::ostream& out, std::ostream& err) {
    std::vector<std::string> names;
    const auto known = scenario_names();
    for (const auto& n : requested) {
        if (n == "all") {
            names.insert(names.end(), known.begin(), known.end());
        } else if (std::find(known.begin(), known.end(), n) == known.end()) {
            err << "error: unknown scenario '" << n << "'; known:";
            for (const auto& k : known) err << " " << k;
            err << "\n";
            return exit_usage;
        } else {
            names.push_back(n);
        }
    }
    bool all_passed = true;
    for (const auto& n : names) {
        const auto report = run_scenario(n, options);
        if (quiet) {
            out << (report.passed() ? "PASS  " : "FAIL  ") << n << "\n";
        } else {
            out << report.to_string();
        }
        all_passed = all_passed && report.passed();
    }
    return all_passed ? exit_ok : exit_check_failed;
}

int cmd_export(const std::vector<std::string>& requested, const std::string& out_path, const std::string& dir,
               bool list, std::ostream& out, std::ostream& err) {
    if (list) {
        for (const auto& n : fixture_names()) out << n << "  " << fixture(n).commentary << "\n";
        return exit_ok;
    }
    std::vector<std::string> names;
    for (const auto& n : requested) {
        if (n == "all") {
            const auto all = fixture_names();
            names.insert(names.end(), all.begin(), all.end());
        } else {
            names.push_back(n);
        }
    }
    if (names.empty()) {
        err << "error: name a fixture, or pass all or --list\n";
        return exit_usage;
    }
    if (!out_path.empty() && names.size() != 1) {
        err << "error: -o takes a single fixture; use --dir for several\n";
        return exit_usage;
    }
    try {
        for (const auto& n : names) {
            const Fixture fx = fixture(n);
            const std::string text = render_model(fx.model, GroundTruth{fx.Jstar, fx.Qstar});
            if (!out_path.empty()) {
                write_text_file(out_path, text);
                out << n << " -> " << out_path << "\n";
            } else if (!dir.empty()) {
                const std::string path = dir + "/" + n + ".json";
                write_text_file(path, text);
                out << n << " -> " << path << "\n";
            } else {
                out << text;
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_ok;
}

} // namespace

SummaryRow summarize(const SolverRun& run, const std::optional<GroundTruth>& truth) {
    SummaryRow row;
    row.algorithm = to_string(run.algorithm);
    row.termination = to_string(run.termination);
    row.iterations = run.iterations();
    if (!run.trace.empty()) row.residual = run.trace.back().residual;
    if (truth && !run.J.empty() && truth->J.size() == run.final_J().size())
        row.dist_J = sup_distance(run.final_J(), truth->J);
    row.counts = run.counts;
    return row;
}

std::string render_summary(const std::vector<SummaryRow>& rows) {
    std::string s;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-18s %6s %10s %10s %8s %8s %8s %7s %7s %8s\n", "algorithm",
                  "termination", "iter", "residual", "dist J*", "T", "T_mu", "F_theta", "solves", "lp", "total");
    s += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-10s %-18s %6zu %10s %10s %8zu %8zu %8zu %7zu %7zu %8zu\n",
                      r.algorithm.c_str(), r.termination.c_str(), r.iterations, fmt(r.residual).c_str(),
                      fmt(r.dist_J).c_str(), r.counts.bellman, r.counts.policy_backup, r.counts.f_theta,
                      r.counts.linear_solve, r.counts.lp_sweep, r.counts.total());
        s += line;
    }
    return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mixed value and policy iteration for total-cost dynamic programming"};
    app.name(args.empty() ? "mvpi" : args.front());
    app.require_subcommand(1);

    std::string validate_path;
    bool validate_lenient = false;
    auto* validate = app.add_subcommand("validate", "Parse a model file and check its invariants");
    validate->add_option("model", validate_path, "Model file, or fixture:<name>")->required();
    validate->add_flag("--lenient", validate_lenient, "Warn on unknown fields instead of rejecting them");

    RunFlags solve_flags;
    auto* solve_cmd = app.add_subcommand("solve", "Run one solver and write its trace");
    add_run_flags(solve_cmd, solve_flags, true);

    RunFlags compare_flags;
    std::string compare_algorithms = "vi,mpi,mixed";
    auto* compare = app.add_subcommand("compare", "Run several solvers from a shared start");
    add_run_flags(compare, compare_flags, false);
    compare->add_option("--algorithms", compare_algorithms, "Comma-separated algorithms")->capture_default_str();

    std::vector<std::string> scenarios;
    ScenarioOptions scenario_options;
    bool quiet = false;
    auto* reproduce = app.add_subcommand("reproduce", "Run scripted scenarios and report expected vs computed");
    reproduce->add_option("names", scenarios, "Scenario names, or all")->required();
    reproduce->add_option("--seed", scenario_options.seed, "Base seed of the random suites")->capture_default_str();
    reproduce->add_option("--models", scenario_options.random_models, "Random models per suite")
        ->capture_default_str();
    reproduce->add_option("--triples", scenario_options.triples, "Triples per regime in the stopping suites")
        ->capture_default_str();
    reproduce->add_flag("--quiet,-q", quiet, "One line per scenario");

    BenchFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "Time seeded random workloads");
    bench->add_option("--suite", bench_flags.suite, "default, or regimes D,N,P")->capture_default_str();
    bench->add_option("--seeds", bench_flags.seeds, "Comma-separated seeds")->capture_default_str();
    bench->add_option("--sizes", bench_flags.sizes, "Comma-separated state counts")->capture_default_str();
    bench->add_option("--algorithms", bench_flags.algorithms, "Comma-separated algorithms")->capture_default_str();
    bench->add_option("--format", bench_flags.format, "csv or json")->capture_default_str();
    bench->add_option("--out,-o", bench_flags.out_path, "Write the report to a file");

    std::vector<std::string> export_names;
    std::string export_out, export_dir;
    bool export_list = false;
    auto* exp = app.add_subcommand("export", "Write built-in fixtures as model files");
    exp->add_option("names", export_names, "Fixture names, or all");
    exp->add_option("--out,-o", export_out, "Output file (single fixture)");
    exp->add_option("--dir", export_dir, "Output directory");
    exp->add_flag("--list", export_list, "List fixtures");

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    if (*validate) return cmd_validate(validate_path, validate_lenient, out, err);
    if (*solve_cmd) return cmd_solve(solve_flags, out, err);
    if (*compare) return cmd_compare(compare_flags, compare_algorithms, out, err);
    if (*reproduce) return cmd_reproduce(scenarios, scenario_options, quiet, out, err);
    if (*bench) return cmd_bench(bench_flags, out, err);
    return cmd_export(export_names, export_out, export_dir, export_list, out, err);
}

} // namespace mvpi::cli
