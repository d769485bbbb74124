#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "mvpi/cli.hpp"
#include "mvpi/io.hpp"
#include "mvpi/models.hpp"

using namespace mvpi;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mvpi");
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "mvpi_cli_tests";
    fs::create_directories(dir);
    return dir;
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string row_for(const std::string& out, const std::string& alg) {
    for (const auto& l : lines(out))
        if (l.rfind(alg + " ", 0) == 0) return l;
    return {};
}

} // namespace

TEST_CASE("export then validate") {
    const fs::path dir = scratch();
    const auto ex = run_cli({"export", "all", "--dir", dir.string()});
    REQUIRE(ex.code == 0);
    for (const auto& name : fixture_names()) {
        const auto v = run_cli({"validate", (dir / (name + ".json")).string()});
        CHECK(v.code == 0);
    }
}

TEST_CASE("validate reports violations and parse errors") {
    const fs::path dir = scratch();
    const fs::path neg = dir / "negative.json";
    write_text_file(neg.string(), R"({
  "format_version": 1, "regime": "P", "discount": 1,
  "states": [ { "name": "a", "controls": [ { "id": "jump", "cost": -2, "transitions": [ { "state": 0, "prob": 1 } ] } ] } ]
})");
    const auto v = run_cli({"validate", neg.string()});
    CHECK(v.code == cli::exit_check_failed);
    CHECK(contains(v.out + v.err, "jump"));

    const fs::path cut = dir / "truncated.json";
    write_text_file(cut.string(), "{\n  \"format_version\": 1,\n  \"states\": [");
    const auto p = run_cli({"validate", cut.string()});
    CHECK(p.code == cli::exit_usage);
    CHECK(contains(p.err, "line"));
}

TEST_CASE("solve reports ground-truth mismatches") {
    const auto r = run_cli({"solve", "fixture:FX-P3a", "-a", "vi"});
    CHECK(r.code == cli::exit_check_failed);
    CHECK(contains(r.out, "J_inf != J* at state 2"));

    const auto p4 = run_cli({"solve", "fixture:FX-P4", "-a", "mixed", "--j0", "cJstar:1.5"});
    CHECK(p4.code == cli::exit_ok);
    CHECK(contains(p4.out, "PASS upper bound"));
    CHECK(contains(p4.out, "PASS lower bound"));
}

TEST_CASE("solve on the discounted fixture contracts at rate alpha") {
    const fs::path trace = scratch() / "d.csv";
    const auto r = run_cli({"solve", "fixture:FX-D", "-a", "mixed", "--trace-out", trace.string()});
    CHECK(r.code == cli::exit_ok);
    const IterationTrace t = parse_trace(read_text_file(trace.string()), TraceFormat::csv);
    const auto& rec = t.records();
    REQUIRE(rec.size() > 3);
    for (std::size_t i = 2; i < rec.size(); ++i) {
        if (!rec[i].residual || !rec[i - 1].residual || *rec[i - 1].residual < 1e-12) continue;
        CHECK(*rec[i].residual <= 0.9 * *rec[i - 1].residual + 1e-15);
    }
}

TEST_CASE("compare") {
    const auto d = run_cli({"compare", "fixture:FX-D", "--tol", "1e-9"});
    CHECK(d.code == cli::exit_ok);
    for (const auto& alg : {"vi", "mpi", "mixed"}) CHECK(contains(row_for(d.out, alg), "converged"));

    const auto p2 = run_cli({"compare", "fixture:FX-P2", "--algorithms", "pi,mixed", "--mu0", "0,1"});
    CHECK(contains(row_for(p2.out, "pi"), "stuck"));
    CHECK(contains(row_for(p2.out, "mixed"), "converged"));

    const auto one = run_cli({"compare", "fixture:FX-D", "--algorithms", "mixed"});
    const auto solo = run_cli({"solve", "fixture:FX-D", "-a", "mixed"});
    CHECK_FALSE(row_for(one.out, "mixed").empty());
    CHECK(row_for(one.out, "mixed") == row_for(solo.out, "mixed"));
}

TEST_CASE("bench output is deterministic apart from timings") {
    const std::vector<std::string> args{"bench", "--suite", "D,P", "--seeds", "1,2", "--sizes", "5,10"};
    const auto a = run_cli(args);
    const auto b = run_cli(args);
    CHECK(a.code == cli::exit_ok);
    auto strip = [](const std::string& s) {
        std::string out;
        for (const auto& l : lines(s)) out += l.substr(0, l.rfind(',')) + "\n";
        return out;
    };
    CHECK(strip(a.out) == strip(b.out));
    CHECK(lines(a.out).size() == 1 + 2 * 2 * 2 * 3);
}

TEST_CASE("MVPI_TOL overrides the default tolerance") {
    ::unsetenv("MVPI_TOL");
    CHECK(cli::default_tolerance() == 1e-10);
    ::setenv("MVPI_TOL", "1e-6", 1);
    CHECK(cli::default_tolerance() == 1e-6);
    ::setenv("MVPI_TOL", "junk", 1);
    CHECK(cli::default_tolerance() == 1e-10);
    ::unsetenv("MVPI_TOL");
}

TEST_CASE("reproduce exit codes") {
    const auto ok = run_cli({"reproduce", "footnote9", "-q"});
    CHECK(ok.code == cli::exit_ok);
    const auto unknown = run_cli({"reproduce", "no-such-scenario"});
    CHECK(unknown.code == cli::exit_usage);
    const auto ladder = run_cli({"reproduce", "example51"});
    CHECK(ladder.code == cli::exit_ok);
    CHECK(contains(ladder.out, "(1, 2, 2, ...)"));
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli({}).code == cli::exit_usage);
    CHECK(run_cli({"solve"}).code == cli::exit_usage);
    CHECK(run_cli({"solve", "fixture:FX-D", "--j0", "sometimes"}).code == cli::exit_usage);
    CHECK(run_cli({"solve", "fixture:FX-N2", "-a", "lp"}).code == cli::exit_usage);
    CHECK(run_cli({"frobnicate"}).code == cli::exit_usage);
}

TEST_CASE("option parsers") {
    const Fixture p2 = fixture("FX-P2");
    const GroundTruth truth{p2.Jstar, p2.Qstar};
    CHECK(cli::parse_j0("inf", p2.model, truth) == ValueVector(2, ExtReal::inf()));
    CHECK(cli::parse_q0("cQstar:2", p2.model, ValueVector(2, 0.0), truth) == QVector{0.0, 0.0, 2.0});
    CHECK_THROWS_AS(cli::parse_j0("cJstar:2", p2.model, std::nullopt), ConfigError);
    CHECK(cli::parse_bound("3", p2.model) == ValueVector(2, 3.0));
    const auto subsets = cli::parse_b_strategy("subsets:0,1;-", p2.model);
    REQUIRE(std::holds_alternative<CustomSubsets>(subsets));
    CHECK(std::get<CustomSubsets>(subsets).subsets.size() == 2);
    CHECK_THROWS_AS(cli::parse_b_strategy("subsets:7", p2.model), ConfigError);
    const auto occ = cli::parse_b_strategy("occupation:0.8:0.1", p2.model);
    CHECK(std::get<OccupationSupport>(occ).beta == 0.8);
    CHECK(cli::parse_mask_schedule("round-robin", p2.model)->cycle() == 3u);
    CHECK(cli::parse_mask_schedule("by-state", p2.model)->cycle() == 2u);
    CHECK(cli::parse_policy("0,1", p2.model).controls() == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(cli::parse_policy("0,2", p2.model), ConfigError);
}
