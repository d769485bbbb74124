#include <doctest.h>

#include "mvpi/evaluation.hpp"
#include "mvpi/models.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/solvers.hpp"
#include "mvpi/trace.hpp"
#include "support.hpp"

using namespace mvpi;

namespace {

constexpr std::size_t kWindow = 60;

// Ladder T on an explicit window; entries past the window repeat the last one.
std::vector<ExtInt> brute_ladder_T(const std::vector<ExtInt>& J) {
    std::vector<ExtInt> out(J.size());
    ExtInt best = ExtInt::inf();
    for (std::size_t u = 1; u < J.size(); ++u)
        if (J[u] < best) best = J[u];
    out[0] = best;
    out[1] = ExtInt(1) + J[0];
    for (std::size_t x = 2; x < J.size(); ++x) out[x] = J[x - 1];
    return out;
}

std::vector<ExtInt> window(const TailConstantVector& v) {
    std::vector<ExtInt> out(kWindow);
    for (std::size_t x = 0; x < kWindow; ++x) out[x] = v.at(x);
    return out;
}

} // namespace

TEST_CASE("fixture optimal costs") {
    CHECK(fixture("FX-N2").Jstar == ValueVector{0.0, -1.0});
    CHECK(fixture("FX-P2").Jstar == ValueVector{0.0, 0.0});
    CHECK(fixture("FX-P3a").Jstar == ValueVector{0.0, ExtReal::inf(), 1.0});
    CHECK(fixture("FX-P3b").Jstar == ValueVector{0.0, 0.0, 1.0});
    CHECK(fixture("FX-P4").Jstar == ValueVector{0.0, 1.0, 2.0});
    const Fixture d = fixture("FX-D");
    CHECK(sup_distance(d.Jstar, testing::reference_optimum(d.model)) < 1e-10);
    for (const auto& name : fixture_names()) {
        const Fixture f = fixture(name);
        CHECK(f.name == name);
        CHECK_FALSE(f.commentary.empty());
        if (!f.model.has_families()) CHECK(sup_distance(bellman_T(f.model, f.Jstar), f.Jstar) <= 1e-12);
    }
    CHECK_THROWS_AS(fixture("FX-Z"), ModelError);
}

TEST_CASE("random models are deterministic per seed") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        const RandomModelParams p{.regime = regime};
        const auto a = random_model(5, p);
        const auto b = random_model(5, p);
        const auto c = random_model(6, p);
        CHECK(model_fingerprint(a.model) == model_fingerprint(b.model));
        CHECK(model_fingerprint(a.model) != model_fingerprint(c.model));
        CHECK(a.Jstar == b.Jstar);
        CHECK(validate_model(a.model).ok());
    }
    SeededUniform r1(3), r2(3);
    for (int i = 0; i < 100; ++i) CHECK(r1.next() == r2.next());
    SeededUniform r(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = r.next();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(r.index(7) < 7u);
    }
}

TEST_CASE("random model ground truth is a fixed point within 1e-10") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto rm = random_model(seed, RandomModelParams{.regime = regime});
            CHECK(sup_distance(bellman_T(rm.model, rm.Jstar), rm.Jstar) <= 1e-10);
            CHECK(sup_distance(rm.Jstar, testing::reference_optimum(rm.model)) <= 1e-9);
            CHECK(rm.Qstar == h_backup(rm.model, rm.Jstar));
        }
    }
}

TEST_CASE("value and policy iteration oracles agree on discounted models") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto rm = random_model(seed, RandomModelParams{.num_states = 8, .regime = Regime::discounted});
        const auto pi = policy_iteration(rm.model, Policy::deterministic(rm.model, std::vector<std::size_t>(8, 0)));
        CHECK(sup_distance(pi.final_J(), rm.Jstar) < 1e-9);
    }
}

TEST_CASE("value iteration from 0 and from 2J* share the limit") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto rm = random_model(seed);
        SolverConfig cfg;
        cfg.tolerance = 1e-13;
        cfg.max_iterations = 100000;
        const auto lo = value_iteration(rm.model, ValueVector(rm.model.num_states(), 0.0), cfg);
        const auto hi = value_iteration(rm.model, scaled(rm.Jstar, 2.0), cfg);
        CHECK(sup_distance(lo.final_J(), hi.final_J()) < 1e-9);
        CHECK(sup_distance(lo.final_J(), rm.Jstar) < 1e-9);
    }
}

TEST_CASE("optimal cost oracle classifies infinite states") {
    StateSpec s0{"0", {AtomicControl{"loop", 0.0, {{0, 1.0}}}}, {}};
    StateSpec s1{"1", {AtomicControl{"loop", 1.0, {{1, 1.0}}}}, {}};
    StateSpec s2{"2", {AtomicControl{"a", 0.0, {{1, 0.5}, {0, 0.5}}}, AtomicControl{"b", 2.0, {{0, 1.0}}}}, {}};
    const TotalCostModel m({s0, s1, s2}, 1.0, Regime::nonnegative);
    CHECK(optimal_cost_oracle(m) == ValueVector{0.0, ExtReal::inf(), 2.0});
}

TEST_CASE("ladder operator matches a direct window computation") {
    SeededUniform rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ExtInt> prefix;
        const std::size_t len = rng.index(6);
        for (std::size_t i = 0; i < len; ++i) prefix.emplace_back(static_cast<std::int64_t>(rng.index(5)));
        const ExtInt tail = rng.index(4) == 0 ? ExtInt::inf() : ExtInt(static_cast<std::int64_t>(rng.index(5)));
        const TailConstantVector J(prefix, tail);
        const auto brute = brute_ladder_T(window(J));
        const auto fast = window(ladder_T(J));
        for (std::size_t x = 0; x + 1 < kWindow; ++x) CHECK(brute[x] == fast[x]);
    }
}

TEST_CASE("ladder value iteration patterns") {
    std::vector<ExtInt> J(kWindow, ExtInt(0));
    for (std::size_t k = 1; k <= 20; ++k) {
        J = brute_ladder_T(J);
        for (std::size_t x = 1; x + 1 < kWindow; ++x) CHECK(J[x] == (x <= k ? ExtInt(1) : ExtInt(0)));
        CHECK(J[0] == ExtInt(0));
    }
    CHECK(ladder_level(0) == TailConstantVector({0}, 1));
    CHECK(ladder_level(1) == TailConstantVector({1}, 2));
    CHECK(ladder_level(5) == TailConstantVector({5}, 6));
    for (std::size_t m = 0; m < 8; ++m) CHECK(ladder_level(m + 1) == ladder_level(m).plus(1));
    const TailConstantVector all_inf({}, ExtInt::inf());
    CHECK(ladder_T(all_inf) == all_inf);
    CHECK(ladder_limit(all_inf) == all_inf);
    CHECK(TailConstantVector({0, 1}, 1).describe() == "(0, 1, 1, ...)");
    CHECK(to_string(ExtInt::inf()) == "inf");
}
