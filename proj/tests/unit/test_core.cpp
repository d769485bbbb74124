#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvpi/chain.hpp"
#include "mvpi/evaluation.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/solvers.hpp"
#include "mvpi/transform.hpp"
#include "support.hpp"

using namespace mvpi;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("extended reals: inf - inf is +inf and 0 * inf is 0 for every sign") {
    const ExtReal pos = ExtReal::inf(), neg = ExtReal::neg_inf();
    CHECK(pos + neg == pos);
    CHECK(neg + pos == pos);
    CHECK(pos - pos == pos);
    CHECK(neg - neg == pos);
    CHECK(pos + pos == pos);
    CHECK(neg + neg == neg);
    for (ExtReal z : {ExtReal(0.0), ExtReal(-0.0)}) {
        CHECK((z * pos).value() == 0.0);
        CHECK((pos * z).value() == 0.0);
        CHECK((z * neg).value() == 0.0);
        CHECK((neg * z).value() == 0.0);
    }
    CHECK(ExtReal(-2.0) * pos == neg);
    CHECK(ExtReal(3.0) * neg == neg);
    CHECK(neg * neg == pos);
    CHECK_THROWS_AS(ExtReal(std::nan("")), std::domain_error);
}

TEST_CASE("extended reals print and parse infinities") {
    CHECK(to_string(ExtReal::inf()) == "inf");
    CHECK(to_string(ExtReal::neg_inf()) == "-inf");
    CHECK(parse_ext_real("inf") == ExtReal::inf());
    CHECK(parse_ext_real("-inf") == ExtReal::neg_inf());
    CHECK(parse_ext_real("0.1").value() == 0.1);
    CHECK_THROWS(parse_ext_real("abc"));
}

TEST_CASE("validate_model") {
    const Fixture p2 = fixture("FX-P2");
    CHECK(validate_model(p2.model).ok());

    SUBCASE("a negative cost under regime P names the rule and the pair") {
        auto states = testing::copy_states(p2.model);
        states[1].controls[1].cost = -1.0;
        const auto report = validate_model(testing::rebuild(p2.model, states));
        REQUIRE_FALSE(report.ok());
        CHECK(report.violations[0].rule == "regime P requires g >= 0");
        CHECK(report.violations[0].location.find("go") != std::string::npos);
    }
    SUBCASE("a row summing to 0.9") {
        auto states = testing::copy_states(p2.model);
        states[1].controls[1].transitions[0].prob = 0.9;
        const auto report = validate_model(testing::rebuild(p2.model, states));
        REQUIRE_FALSE(report.ok());
        CHECK(report.violations[0].rule == "distribution sum");
    }
    for (const auto& name : fixture_names()) CHECK_MESSAGE(validate_model(fixture(name).model).ok(), name);
}

TEST_CASE("affine_infimum on open intervals") {
    const Interval open{0.0, 1.0, false, false};
    auto r = affine_infimum(0.5, 2.0, open);
    CHECK(r.value == 0.5);
    CHECK_FALSE(r.attained);
    CHECK(r.point == 0.0);

    r = affine_infimum(0.0, ExtReal::inf(), open);
    CHECK(r.value == ExtReal::inf());
    CHECK_FALSE(r.attained);

    r = affine_infimum(1.0, -3.0, open);
    CHECK(r.value == -2.0);
    CHECK_FALSE(r.attained);
    CHECK(r.point == 1.0);

    r = affine_infimum(1.0, -3.0, Interval{0.0, 1.0, true, true});
    CHECK(r.attained);
}

TEST_CASE("bellman_T on the fixtures") {
    const Fixture n2 = fixture("FX-N2");
    CHECK(bellman_T(n2.model, ValueVector{0.0, 0.0}) == ValueVector{0.0, -1.0});

    const Fixture p3a = fixture("FX-P3a");
    ValueVector J(3, 0.0);
    for (int k = 0; k < 20; ++k) {
        CHECK(J[2] == 0.0);
        J = bellman_T(p3a.model, J);
    }
    CHECK(bellman_T(p3a.model, p3a.Jstar) == ValueVector{0.0, ExtReal::inf(), 1.0});
}

TEST_CASE("bellman_T_mu") {
    const Fixture n2 = fixture("FX-N2");
    const Policy stay = Policy::deterministic(n2.model, {0, 0});
    CHECK(bellman_T_mu(n2.model, stay, n2.Jstar)[1] == -1.0);
    CHECK(bellman_T(n2.model, n2.Jstar)[1] == -1.0);

    const Fixture p2 = fixture("FX-P2");
    const Policy go = Policy::deterministic(p2.model, {0, 1});
    CHECK(bellman_T_mu(p2.model, go, ValueVector{0.0, 1.0}) == ValueVector{0.0, 1.0});

    const auto rm = random_model(3);
    const Policy uni = Policy::uniform(rm.model);
    const ValueVector out = bellman_T_mu(rm.model, uni, ValueVector(rm.model.num_states(), 0.0));
    for (std::size_t x = 0; x < rm.model.num_states(); ++x) {
        double expected = 0.0;
        for (std::size_t u = 0; u < rm.model.num_controls(x); ++u)
            expected += rm.model.control(x, u).cost.value() / static_cast<double>(rm.model.num_controls(x));
        CHECK(out[x].value() == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("h_backup, m_minimize and greedy_select") {
    const Fixture p2 = fixture("FX-P2");
    const QVector Q = h_backup(p2.model, p2.Jstar);
    CHECK(Q == QVector{0.0, 0.0, 1.0});
    CHECK(m_minimize(p2.model, Q) == p2.Jstar);
    CHECK(greedy_controls(p2.model, Q) == std::vector<std::size_t>{0, 0});
    CHECK(greedy_controls(p2.model, Q, 5.0) == std::vector<std::size_t>{0, 0});

    const Fixture n2 = fixture("FX-N2");
    const QVector Qn = h_backup(n2.model, n2.Jstar);
    CHECK(Qn == QVector{0.0, -1.0, -1.0});
    CHECK(m_minimize(n2.model, Qn) == ValueVector{0.0, -1.0});
    CHECK(greedy_controls(n2.model, Qn) == std::vector<std::size_t>{0, 0});

    const auto rm = random_model(5, RandomModelParams{.regime = Regime::discounted});
    const QVector g = h_backup(rm.model, ValueVector(rm.model.num_states(), 0.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto [x, u] = rm.model.pair_at(i);
        CHECK(g[i] == rm.model.control(x, u).cost);
    }
    const Fixture p4 = fixture("FX-P4");
    CHECK(m_minimize(p4.model, QVector{0.0, 7.0, 9.0}) == ValueVector{0.0, 7.0, 9.0});
}

TEST_CASE("operator properties on random models") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto rm = random_model(seed, RandomModelParams{.regime = regime});
            const auto& m = rm.model;
            SeededUniform rng(seed);
            const ValueVector J = testing::random_values(rng, m.num_states(), -3.0, 3.0);
            ValueVector Jhi = J;
            for (std::size_t x = 0; x < Jhi.size(); ++x) Jhi[x] += rng.uniform(0.0, 1.0);
            const Policy mu = testing::random_deterministic(rng, m);
            CHECK(all_leq(bellman_T(m, J), bellman_T(m, Jhi)));
            CHECK(all_leq(bellman_T_mu(m, mu, J), bellman_T_mu(m, mu, Jhi)));
            CHECK(m_minimize(m, h_backup(m, J)) == bellman_T(m, J));
            if (regime == Regime::discounted) {
                const ValueVector J2 = testing::random_values(rng, m.num_states(), -3.0, 3.0);
                CHECK(sup_distance(bellman_T(m, J), bellman_T(m, J2)) <=
                      m.discount() * sup_distance(J, J2) + 1e-12);
            }
        }
    }
}

TEST_CASE("fixture ground truth is a fixed point") {
    for (const auto& name : fixture_names()) {
        const Fixture f = fixture(name);
        CHECK_MESSAGE(sup_distance(bellman_T(f.model, f.Jstar), f.Jstar) <= 1e-12, name);
        if (f.Qstar) CHECK_MESSAGE(sup_distance(h_backup(f.model, f.Jstar), *f.Qstar) <= 1e-12, name);
    }
}

TEST_CASE("policy evaluation") {
    const Fixture p2 = fixture("FX-P2");
    const auto ev = evaluate_policy(p2.model, Policy::deterministic(p2.model, {0, 1}));
    CHECK(ev.value == ValueVector{0.0, 1.0});
    CHECK(ev.exact);

    const Fixture p3b = fixture("FX-P3b");
    for (double u : {0.05, 0.3, 0.5, 0.77, 0.95}) {
        const Policy mu(std::vector<Policy::Action>{std::vector<double>{1.0}, FamilyChoice{0, u},
                                                    std::vector<double>{1.0}});
        const auto e = evaluate_policy(p3b.model, mu);
        CHECK(sup_distance(e.value, ValueVector{0.0, 1.0, 2.0}) <= 1e-12);
    }

    const Fixture p3a = fixture("FX-P3a");
    const Policy mu(std::vector<Policy::Action>{std::vector<double>{1.0}, std::vector<double>{1.0},
                                                FamilyChoice{0, 0.5}});
    CHECK(evaluate_policy(p3a.model, mu).value[1] == ExtReal::inf());

    SUBCASE("iterative path is monotone and agrees with the exact solve") {
        for (auto regime : {Regime::nonpositive, Regime::nonnegative}) {
            const auto rm = random_model(11, RandomModelParams{.regime = regime});
            SeededUniform rng(11);
            const Policy pol = testing::random_deterministic(rng, rm.model);
            EvaluationOptions opts;
            opts.method = EvaluationMethod::iterative;
            opts.record_iterates = true;
            const auto it = evaluate_policy(rm.model, pol, opts);
            for (std::size_t k = 1; k < it.iterates.size(); ++k) {
                if (regime == Regime::nonnegative)
                    CHECK(all_leq(it.iterates[k - 1], it.iterates[k]));
                else
                    CHECK(all_leq(it.iterates[k], it.iterates[k - 1]));
            }
            CHECK(sup_distance(it.value, evaluate_policy(rm.model, pol).value) <= 1e-9);
        }
    }
}

TEST_CASE("state marginals and occupation measures") {
    const Fixture p2 = fixture("FX-P2");
    const Policy go = Policy::deterministic(p2.model, {0, 1});
    CHECK(state_marginal(p2.model, go, {0.0, 1.0}, 0) == std::vector<double>{0.0, 1.0});
    CHECK(state_marginal(p2.model, go, {0.0, 1.0}, 1) == std::vector<double>{1.0, 0.0});
    for (std::size_t n = 1; n < 5; ++n) CHECK(expected_value_at_stage(p2.model, go, {0.0, 1.0}, n, p2.Jstar) == 0.0);

    const auto p = occupation_measure(p2.model, go, {0.0, 1.0}, 0.5);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    const Policy stay = Policy::deterministic(p2.model, {0, 0});
    const auto q = occupation_measure(p2.model, stay, {0.3, 0.7}, 0.8);
    CHECK(q[0] == doctest::Approx(0.3));
    CHECK(q[1] == doctest::Approx(0.7));

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rm = random_model(seed);
        const std::vector<double> rho(rm.model.num_states(), 1.0 / static_cast<double>(rm.model.num_states()));
        const auto occ = occupation_measure(rm.model, Policy::uniform(rm.model), rho, 0.9);
        double total = 0.0;
        for (double v : occ) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("absorbing_core") {
    const Fixture p2 = fixture("FX-P2");
    const Policy go = Policy::deterministic(p2.model, {0, 1});
    CHECK(absorbing_core(p2.model, go, StateSet::all(2)) == StateSet::all(2));
    CHECK(absorbing_core(p2.model, go, StateSet::of(2, {1})) == StateSet::none(2));
    CHECK(absorbing_core(p2.model, go, StateSet::of(2, {0, 1})) == StateSet::of(2, {0, 1}));
}

TEST_CASE("transition-discount conversion") {
    auto build = [](double beta) {
        TransitionDiscountModel base;
        base.state_names = {"home", "a", "b"};
        base.controls = {
            {{"stay", {{0, 1.0, 0.0, beta}}}},
            {{"x", {{1, 0.5, 1.0, beta}, {2, 0.5, 2.0, beta}}}, {"y", {{0, 1.0, 4.0, beta}}}},
            {{"z", {{0, 0.25, 1.0, beta}, {1, 0.75, 0.5, beta}}}},
        };
        return convert_transition_discount(base, Regime::nonnegative);
    };

    SUBCASE("beta = 1 leaves the extra state unreachable") {
        const auto m = build(1.0);
        REQUIRE(m.num_states() == 4);
        for (std::size_t x = 0; x < 3; ++x)
            for (std::size_t u = 0; u < m.num_controls(x); ++u)
                for (const auto& t : m.control(x, u).transitions)
                    if (t.target == 3) CHECK(t.prob == 0.0);
        CHECK(validate_model(m).ok());
    }
    SUBCASE("beta = 0 is a one-step problem") {
        const auto m = build(0.0);
        const auto J = optimal_cost_oracle(m);
        CHECK(J[1].value() == doctest::Approx(1.5));
        CHECK(J[2].value() == doctest::Approx(0.625));
    }
    SUBCASE("constant beta matches the discounted model") {
        const auto m = build(0.9);
        std::vector<StateSpec> states(4);
        const auto conv = testing::copy_states(m);
        for (std::size_t x = 0; x < 3; ++x) {
            states[x].name = conv[x].name;
            for (const auto& c : conv[x].controls) {
                AtomicControl d{c.id, c.cost, {}};
                for (const auto& t : c.transitions)
                    if (t.target != 3 && t.prob > 0) d.transitions.push_back({t.target, t.prob / 0.9});
                states[x].controls.push_back(d);
            }
        }
        states[3] = conv[3];
        const TotalCostModel discounted(states, 0.9, Regime::discounted, 4.0);
        CHECK(sup_distance(optimal_cost_oracle(m), optimal_cost_oracle(discounted)) < 1e-9);
    }
}

TEST_CASE("regime N classification of -inf states") {
    std::vector<StateSpec> s(2);
    s[0].name = "end";
    s[0].controls = {{"loop", 0.0, {{0, 1.0}}}};
    s[1].name = "pump";
    s[1].controls = {{"again", -1.0, {{1, 1.0}}}, {"quit", 0.0, {{0, 1.0}}}};
    const TotalCostModel m(s, 1.0, Regime::nonpositive);
    const auto cls = limit_infinite_states(m);
    REQUIRE(cls);
    CHECK(cls->neg_inf == StateSet::of(2, {1}));
    CHECK(value_iteration(m, ValueVector(2, 0.0)).final_J() == ValueVector{0.0, -kInf});
}
