#include <doctest.h>

#include "mvpi/evaluation.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/solvers.hpp"
#include "support.hpp"

using namespace mvpi;

namespace {

GroundTruth truth_of(const Fixture& f) { return GroundTruth{f.Jstar, f.Qstar}; }

GroundTruth truth_of(const RandomModel& rm) { return GroundTruth{rm.Jstar, rm.Qstar}; }

// Greedy for Q* on the zero set of J*, arbitrary elsewhere: J_mu is finite and vanishes where J* does.
Policy cone_policy(const RandomModel& rm, SeededUniform& rng) {
    const auto greedy = greedy_controls(rm.model, rm.Qstar);
    std::vector<std::size_t> u(rm.model.num_states());
    for (std::size_t x = 0; x < u.size(); ++x)
        u[x] = rm.Jstar[x] == 0.0 ? greedy[x] : rng.index(rm.model.num_controls(x));
    return Policy::deterministic(rm.model, u);
}

} // namespace

TEST_CASE("value iteration on the continuum fixtures") {
    const Fixture p3a = fixture("FX-P3a");
    const auto up = value_iteration(p3a.model, ValueVector(3, 0.0));
    CHECK(up.final_J() == ValueVector{0.0, ExtReal::inf(), 0.0});
    const auto down = value_iteration(p3a.model, ValueVector{0.0, ExtReal::inf(), 2.0});
    CHECK(down.final_J() == p3a.Jstar);

    const Fixture p3b = fixture("FX-P3b");
    const ValueVector Jmu{0.0, 1.0, 2.0};
    const auto stay = value_iteration(p3b.model, Jmu);
    for (const auto& J : stay.J) CHECK(J == Jmu);
}

TEST_CASE("value iteration reports the cap") {
    const Fixture d = fixture("FX-D");
    SolverConfig cfg;
    cfg.max_iterations = 3;
    cfg.tolerance = 1e-14;
    CHECK_THROWS_AS(value_iteration(d.model, ValueVector(3, 0.0), cfg), ConvergenceError);
}

TEST_CASE("policy iteration") {
    const Fixture p2 = fixture("FX-P2");
    SolverConfig cfg;
    cfg.ground_truth = truth_of(p2);
    const auto stuck = policy_iteration(p2.model, Policy::deterministic(p2.model, {0, 1}), cfg);
    CHECK(stuck.termination == Termination::stuck);
    CHECK(stuck.final_J() == ValueVector{0.0, 1.0});

    const Fixture d = fixture("FX-D");
    const ValueVector Jstar = testing::reference_optimum(d.model);
    for (std::size_t a = 0; a < d.model.num_controls(0); ++a) {
        std::vector<std::size_t> u(d.model.num_states(), 0);
        u[0] = a;
        const auto run = policy_iteration(d.model, Policy::deterministic(d.model, u));
        CHECK(run.termination == Termination::optimal_certified);
        for (std::size_t k = 1; k < run.J.size(); ++k) CHECK(all_leq(run.J[k], run.J[k - 1], 1e-12));
        CHECK(sup_distance(run.final_J(), Jstar) < 1e-9);
    }

    SUBCASE("nonnegative model started inside the cJ* cone") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto rm = random_model(seed);
            SeededUniform rng(seed);
            const Policy mu0 = cone_policy(rm, rng);
            CHECK(cone_ratio(evaluate_policy(rm.model, mu0).value, rm.Jstar).member);
            SolverConfig c;
            c.ground_truth = truth_of(rm);
            const auto run = policy_iteration(rm.model, mu0, c);
            CHECK(sup_distance(run.final_J(), rm.Jstar) < 1e-9);
        }
    }
}

TEST_CASE("modified policy iteration") {
    const Fixture d = fixture("FX-D");
    const ValueVector J0(3, 0.0);
    SolverConfig cfg;
    cfg.tolerance = 1e-12;
    const auto one = modified_policy_iteration(d.model, std::nullopt, J0, NkSchedule::constant(1), cfg);
    const auto vi = value_iteration(d.model, J0, cfg);
    const std::size_t common = std::min(one.J.size(), vi.J.size());
    for (std::size_t k = 0; k < common; ++k) CHECK(sup_distance(one.J[k], vi.J[k]) <= 1e-15);

    const auto mpi = modified_policy_iteration(d.model, std::nullopt, J0, NkSchedule::constant(5), cfg);
    const auto pi = policy_iteration(d.model, greedy_select(d.model, h_backup(d.model, J0)), cfg);
    CHECK(mpi.converged());
    CHECK(sup_distance(mpi.final_J(), pi.final_J()) < 1e-9);
}

TEST_CASE("mixed method with empty B is value iteration") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        const auto rm = random_model(17, RandomModelParams{.regime = regime});
        SolverConfig cfg;
        cfg.b_strategy = EmptyB{};
        cfg.max_iterations = 40;
        cfg.min_iterations = 40;
        const ValueVector J0(rm.model.num_states(), 0.0);
        cfg.j0 = J0;
        const auto mixed = mixed_vpi(rm.model, cfg);
        ValueVector J = J0;
        for (std::size_t k = 0; k < mixed.J.size(); ++k) {
            CHECK(mixed.J[k] == J);
            J = bellman_T(rm.model, J);
        }
    }
}

TEST_CASE("mixed method succeeds where policy iteration is stuck") {
    const Fixture p2 = fixture("FX-P2");
    SolverConfig cfg;
    cfg.j0 = ValueVector(2, 0.0);
    cfg.mu0 = Policy::deterministic(p2.model, {0, 1});
    cfg.ground_truth = truth_of(p2);
    const auto run = mixed_vpi(p2.model, cfg);
    CHECK(run.converged());
    CHECK(run.final_J() == p2.Jstar);
    CHECK(run.Q.back() == *p2.Qstar);
}

TEST_CASE("mixed method: geometric rate on the discounted fixture") {
    const Fixture d = fixture("FX-D");
    const ValueVector Jstar = testing::reference_optimum(d.model);
    const QVector Qstar = h_backup(d.model, Jstar);
    SeededUniform rng(99);
    SolverConfig cfg;
    cfg.j0 = testing::random_values(rng, 3, -5, 5);
    cfg.q0 = testing::random_q(rng, d.model.num_pairs(), -5, 5);
    cfg.nk = NkSchedule::constant(2);
    cfg.max_iterations = 60;
    cfg.min_iterations = 60;
    const auto run = mixed_vpi(d.model, cfg);
    const double delta = std::max(sup_distance(*cfg.j0, Jstar), sup_distance(*cfg.q0, Qstar));
    double a = 1.0;
    for (std::size_t k = 0; k < run.J.size(); ++k, a *= d.model.discount()) {
        const double e = std::max(sup_distance(run.J[k], Jstar), sup_distance(run.Q[k], Qstar));
        CHECK(e <= a * delta + 1e-12);
    }
    const auto report = verify_certificates(d.model, run, GroundTruth{Jstar, Qstar});
    const auto* rate = report.find("geometric rate");
    REQUIRE(rate);
    CHECK(rate->passed);
    CHECK(rate->margin >= 0.0);
}

TEST_CASE("mixed method on the nonpositive fixture certifies the sandwich") {
    const Fixture n2 = fixture("FX-N2");
    SolverConfig cfg;
    cfg.j0 = ValueVector(2, 0.0);
    cfg.q0 = QVector(3, 0.0);
    cfg.ground_truth = truth_of(n2);
    const auto run = mixed_vpi(n2.model, cfg);
    const auto report = verify_certificates(n2.model, run, truth_of(n2));
    CHECK(report.all_passed());
    CHECK(report.find("upper bound J_k <= T^k(J0)"));
    CHECK(report.find("lower bound J* <= J_k"));
    CHECK(report.find("convergence"));
    for (const auto& r : run.trace.records()) {
        CHECK(r.above_optimal == true);
        CHECK(r.below_vi == true);
    }
}

TEST_CASE("certificates flag fixed points outside the cone") {
    const Fixture p3b = fixture("FX-P3b");
    const auto run = value_iteration(p3b.model, ValueVector{0.0, 1.0, 2.0});
    const auto report = verify_certificates(p3b.model, run, truth_of(p3b));
    const auto* cone = report.find("initial cone");
    REQUIRE(cone);
    CHECK_FALSE(cone->passed);
    CHECK(cone->detail.find("state 1") != std::string::npos);

    const auto m = cone_ratio(ValueVector{0.0, 1.0, 2.0}, p3b.Jstar);
    CHECK_FALSE(m.member);
    CHECK(m.witness == 1u);
    const auto in = cone_ratio(ValueVector{0.0, 0.0, 3.0}, p3b.Jstar);
    CHECK(in.member);
    CHECK(in.c == 3.0);
}

TEST_CASE("lp variant") {
    SUBCASE("empty B reduces to value iteration") {
        const auto rm = random_model(4);
        SolverConfig cfg;
        cfg.algorithm = Algorithm::lp_variant;
        cfg.b_strategy = EmptyB{};
        cfg.j0 = scaled(rm.Jstar, 1.5);
        cfg.max_iterations = 30;
        cfg.min_iterations = 30;
        const auto run = lp_variant_vpi(rm.model, cfg);
        ValueVector J = *cfg.j0;
        for (const auto& Jk : run.J) {
            CHECK(sup_distance(Jk, J) <= 1e-14);
            J = bellman_T(rm.model, J);
        }
    }
    SUBCASE("converges from 1.5 J* with both inequalities") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto rm = random_model(seed);
            SolverConfig cfg;
            cfg.algorithm = Algorithm::lp_variant;
            cfg.j0 = scaled(rm.Jstar, 1.5);
            cfg.ground_truth = truth_of(rm);
            cfg.tolerance = 1e-12;
            const auto run = lp_variant_vpi(rm.model, cfg);
            CHECK(sup_distance(run.final_J(), rm.Jstar) < 1e-8);
            for (const auto& c : run.lp_checks) {
                CHECK(c.upper_violation <= 1e-10);
                CHECK(c.lower_violation <= 1e-10);
                CHECK(c.within_cone == true);
            }
        }
    }
}

TEST_CASE("configuration conflicts are rejected before computation") {
    const Fixture n2 = fixture("FX-N2");
    SolverConfig lp;
    lp.algorithm = Algorithm::lp_variant;
    CHECK_THROWS_AS(validate_config(n2.model, lp), ConfigError);

    const Fixture p2 = fixture("FX-P2");
    SolverConfig neg;
    neg.j0 = ValueVector{0.0, -1.0};
    CHECK_THROWS_AS(validate_config(p2.model, neg), ConfigError);

    SolverConfig first_rule;
    first_rule.require_first_rule = true;
    first_rule.nk = NkSchedule::exact();
    CHECK_THROWS_AS(validate_config(p2.model, first_rule), ConfigError);

    SolverConfig tol;
    tol.tolerance = 0.0;
    CHECK_THROWS_AS(validate_config(p2.model, tol), ConfigError);

    SolverConfig fam;
    fam.algorithm = Algorithm::mixed;
    CHECK_THROWS_AS(validate_config(fixture("FX-P3b").model, fam), ConfigError);
    fam.algorithm = Algorithm::value_iteration;
    CHECK_NOTHROW(validate_config(fixture("FX-P3b").model, fam));
}

TEST_CASE("discounted policy extraction") {
    const Fixture d = fixture("FX-D");
    const ValueVector Jstar = testing::reference_optimum(d.model);
    const auto nu = extract_policy_discounted(d.model, h_backup(d.model, Jstar), 0.0);
    CHECK(sup_distance(evaluate_policy(d.model, nu.policy).value, Jstar) < 1e-9);
    const auto b = extract_policy_discounted(d.model, h_backup(d.model, Jstar), 0.01, 3, 2.0);
    REQUIRE(b.bound);
    CHECK(*b.bound == doctest::Approx((2 * 0.729 * 2.0 + 0.01) / 0.1));
}

TEST_CASE("n-stage policies") {
    const auto rm = random_model(12);
    const auto at_opt = build_n_stage_policy(rm.model, rm.Jstar, 0.1);
    CHECK(at_opt.stages.size() == 1);
    CHECK(at_opt.max_slack <= 0.1);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = random_model(seed);
        SeededUniform rng(seed);
        ValueVector J(r.model.num_states());
        for (std::size_t x = 0; x < J.size(); ++x) J[x] = ExtReal(rng.uniform(1.0, 1.5)) * r.Jstar[x];
        const double delta = 0.05;
        const auto nsp = build_n_stage_policy(r.model, J, delta);
        ValueVector composed = J;
        for (auto it = nsp.stages.rbegin(); it != nsp.stages.rend(); ++it) composed = bellman_T_mu(r.model, *it, composed);
        double worst = 0.0;
        for (std::size_t x = 0; x < J.size(); ++x) worst = std::max(worst, (composed[x] - J[x]).value());
        CHECK(worst <= delta);
        CHECK(worst == doctest::Approx(nsp.max_slack).epsilon(1e-12));
    }
}

TEST_CASE("schedules and names") {
    CHECK(NkSchedule::parse("exact").is_exact());
    const auto list = NkSchedule::parse("3,2,1");
    CHECK(list.at(0) == 3);
    CHECK(list.at(2) == 1);
    CHECK(list.at(50) == 1);
    CHECK(list.describe() == "3,2,1");
    CHECK_THROWS(NkSchedule::parse("0"));
    CHECK_THROWS(NkSchedule::parse("x"));
    for (auto a : {Algorithm::value_iteration, Algorithm::policy_iteration, Algorithm::modified_policy_iteration,
                   Algorithm::mixed, Algorithm::lp_variant})
        CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_THROWS_AS(parse_algorithm("simplex"), ConfigError);
}

TEST_CASE("runs are deterministic") {
    const auto rm = random_model(77, RandomModelParams{.regime = Regime::discounted});
    SolverConfig cfg;
    cfg.b_strategy = OccupationSupport{std::vector<double>(rm.model.num_states(), 1.0 / 6.0), 0.9, 0.05};
    const auto a = mixed_vpi(rm.model, cfg);
    const auto b = mixed_vpi(rm.model, cfg);
    CHECK(a.J == b.J);
    CHECK(a.Q == b.Q);
    CHECK(a.iterations() == b.iterations());
}

TEST_CASE("asynchronous round-robin updates reach the synchronous limit") {
    const Fixture d = fixture("FX-D");
    SolverConfig cfg;
    cfg.nk = NkSchedule::constant(1);
    cfg.tolerance = 1e-13;
    cfg.max_iterations = 100000;
    SolverConfig async = cfg;
    async.async = AsyncSchedule::round_robin(d.model);
    const auto a = mixed_vpi(d.model, async);
    const auto s = mixed_vpi(d.model, cfg);
    CHECK(a.converged());
    CHECK(sup_distance(a.final_J(), testing::reference_optimum(d.model)) < 1e-9);
    CHECK(sup_distance(a.final_J(), s.final_J()) < 1e-9);
}
