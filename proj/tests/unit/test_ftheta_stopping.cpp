#include <doctest.h>

#include "mvpi/ftheta.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/stopping.hpp"
#include "support.hpp"

using namespace mvpi;

namespace {

struct P2 {
    Fixture f = fixture("FX-P2");
    Policy go = Policy::deterministic(f.model, {0, 1});
    Policy stay = Policy::deterministic(f.model, {0, 0});
};

} // namespace

TEST_CASE("F_theta with empty B is the H backup") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rm = random_model(seed, RandomModelParams{.regime = Regime::discounted});
        SeededUniform rng(seed);
        const ValueVector J = testing::random_values(rng, rm.model.num_states(), -1, 1);
        const QVector Q = testing::random_q(rng, rm.model.num_pairs(), -1, 1);
        const Theta theta{testing::random_deterministic(rng, rm.model), StateSet::none(rm.model.num_states())};
        CHECK(f_theta_apply(rm.model, theta, Q, J) == h_backup(rm.model, J));
    }
}

TEST_CASE("F_theta fixes (Q*, J*)") {
    P2 p;
    const Theta theta{p.go, StateSet::all(2)};
    CHECK(f_theta_apply(p.f.model, theta, *p.f.Qstar, p.f.Jstar) == *p.f.Qstar);
}

TEST_CASE("F_theta with deterministic mu and B = S takes min{J, Q(., mu)}") {
    const auto rm = random_model(21, RandomModelParams{.regime = Regime::discounted});
    const auto& m = rm.model;
    SeededUniform rng(21);
    const ValueVector J = testing::random_values(rng, m.num_states(), -1, 1);
    const QVector Q = testing::random_q(rng, m.num_pairs(), -1, 1);
    const Policy mu = testing::random_deterministic(rng, m);
    const auto controls = mu.controls();
    const QVector out = f_theta_apply(m, Theta{mu, StateSet::all(m.num_states())}, Q, J);
    for (std::size_t i = 0; i < m.num_pairs(); ++i) {
        const auto [x, u] = m.pair_at(i);
        const auto& c = m.control(x, u);
        double expected = c.cost.value();
        double acc = 0.0;
        for (const auto& t : c.transitions)
            acc += t.prob * std::min(J[t.target].value(), Q[m.pair_index(t.target, controls[t.target])].value());
        expected += m.discount() * acc;
        CHECK(out[i].value() == doctest::Approx(expected).epsilon(1e-14));
    }

    SUBCASE("J = +inf reproduces the policy backup on Q exactly") {
        const ValueVector inf(m.num_states(), ExtReal::inf());
        const QVector o2 = f_theta_apply(m, Theta{mu, StateSet::all(m.num_states())}, Q, inf);
        for (std::size_t i = 0; i < m.num_pairs(); ++i) {
            const auto [x, u] = m.pair_at(i);
            const auto& c = m.control(x, u);
            ExtReal acc = 0.0;
            for (const auto& t : c.transitions) acc += ExtReal(t.prob) * Q[m.pair_index(t.target, controls[t.target])];
            CHECK(o2[i] == c.cost + ExtReal(m.discount()) * acc);
        }
    }
}

TEST_CASE("F_theta-hat agrees with F_theta") {
    const auto rm = random_model(8, RandomModelParams{.regime = Regime::nonnegative});
    const auto& m = rm.model;
    SeededUniform rng(8);
    const ValueVector J = testing::random_values(rng, m.num_states(), 0, 2);
    const QVector Q = testing::random_q(rng, m.num_pairs(), 0, 2);
    const Policy mu = testing::random_deterministic(rng, m);
    const StateSet B = testing::random_set(rng, m.num_states());

    PairSet full = PairSet::none(m.num_pairs());
    for (std::size_t x : B.elements())
        for (std::size_t u = 0; u < m.num_controls(x); ++u) full.insert(m.pair_index(x, u));
    CHECK(f_theta_hat_apply(m, ThetaHat{mu, full}, Q, J) == f_theta_apply(m, Theta{mu, B}, Q, J));
    CHECK(f_theta_hat_apply(m, ThetaHat{mu, PairSet::none(m.num_pairs())}, Q, J) == h_backup(m, J));

    P2 p;
    PairSet R = PairSet::none(3);
    R.insert(1);
    CHECK(f_theta_hat_apply(p.f.model, ThetaHat{p.stay, R}, *p.f.Qstar, p.f.Jstar) == *p.f.Qstar);
}

TEST_CASE("F_theta powers: base case, monotonicity and contraction") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto rm = random_model(seed, RandomModelParams{.regime = regime});
            const auto& m = rm.model;
            SeededUniform rng(seed * 3);
            const Theta theta{testing::random_deterministic(rng, m), testing::random_set(rng, m.num_states())};
            const ValueVector J = testing::random_values(rng, m.num_states(), -1, 1);
            const QVector Q = testing::random_q(rng, m.num_pairs(), -1, 1);
            ValueVector J2 = J;
            QVector Q2 = Q;
            for (std::size_t i = 0; i < J2.size(); ++i) J2[i] += rng.uniform(0, 1);
            for (std::size_t i = 0; i < Q2.size(); ++i) Q2[i] += rng.uniform(0, 1);
            CHECK(f_theta_power(m, theta, Q, J, 1) == f_theta_apply(m, theta, Q, J));
            for (std::size_t n : {1, 2, 5}) CHECK(all_leq(f_theta_power(m, theta, Q, J, n), f_theta_power(m, theta, Q2, J2, n)));

            const QVector F = f_theta_apply(m, theta, Q, J);
            CHECK(all_leq(F, h_backup(m, J)));
            CHECK(all_leq(m_minimize(m, F), bellman_T(m, J)));
            if (regime == Regime::discounted) {
                const double d = std::max(sup_distance(J, J2), sup_distance(Q, Q2));
                CHECK(sup_distance(F, f_theta_apply(m, theta, Q2, J2)) <= m.discount() * d + 1e-12);
            }
        }
    }
}

TEST_CASE("q_fixed_point") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto rm = random_model(seed, RandomModelParams{.regime = regime});
            const auto& m = rm.model;
            SeededUniform rng(seed * 5);
            const Theta theta{testing::random_deterministic(rng, m), testing::random_set(rng, m.num_states())};
            FixedPointOptions fo;
            fo.tolerance = 1e-13;
            const auto at_opt = q_fixed_point(m, theta, rm.Jstar, fo);
            CHECK(sup_distance(at_opt.Q, rm.Qstar) < 1e-9);

            ValueVector J = rm.Jstar;
            for (std::size_t x = 0; x < J.size(); ++x) J[x] += rng.uniform(0, 1);
            const auto above = q_fixed_point(m, theta, J, fo);
            CHECK(all_leq(at_opt.Q, above.Q, 1e-10));
            CHECK(sup_distance(f_theta_apply(m, theta, above.Q, J), above.Q) < 1e-9);
            if (regime == Regime::discounted)
                CHECK(sup_distance(above.Q, rm.Qstar) <= m.discount() * sup_distance(J, rm.Jstar) + 1e-9);
        }
    }
}

TEST_CASE("masked updates") {
    const Fixture d = fixture("FX-D");
    const auto& m = d.model;
    SeededUniform rng(4);
    const Theta theta{testing::random_deterministic(rng, m), StateSet::all(m.num_states())};
    const ValueVector J = testing::random_values(rng, m.num_states(), -1, 1);
    const QVector Q = testing::random_q(rng, m.num_pairs(), -1, 1);

    const auto [Qf, Jf] = masked_update(m, theta, Q, J, PairSet::all(m.num_pairs()), StateSet::all(m.num_states()), 3);
    const QVector expected = f_theta_power(m, theta, Q, J, 3);
    CHECK(Qf == expected);
    CHECK(Jf == m_minimize(m, expected));

    const auto [Qe, Je] = masked_update(m, theta, Q, J, PairSet::none(m.num_pairs()), StateSet::none(m.num_states()), 3);
    CHECK(Qe == Q);
    CHECK(Je == J);
}

TEST_CASE("stopping problem construction") {
    P2 p;
    const auto problem = build_stopping(p.f.model, Theta{p.go, StateSet::all(2)}, p.f.Jstar);
    CHECK(problem.num_graph_pairs() == 3);
    std::size_t live = 0;
    for (std::size_t z = 0; z < problem.num_states(); ++z)
        if (problem.pair_state(z).kind != PairStateKind::outside_graph) ++live;
    CHECK(live == 4);
    for (std::size_t z = 0; z < 3; ++z) {
        CHECK(problem.stop_cost(z) == 0.0);
        CHECK(problem.can_continue(z));
    }
    CHECK(problem.continue_cost(0) == 0.0);
    CHECK(problem.continue_cost(1) == 0.0);
    CHECK(problem.continue_cost(2) == 1.0);

    const auto V = t_o_apply(problem, std::vector<ExtReal>(problem.num_states(), 0.0));
    CHECK(V[1] == 0.0);
    CHECK(V[problem.terminal_state()] == 0.0);
}

TEST_CASE("stopping problem with empty B") {
    const auto rm = random_model(2, RandomModelParams{.regime = Regime::nonnegative});
    const auto& m = rm.model;
    SeededUniform rng(2);
    const ValueVector J = testing::random_values(rng, m.num_states(), 0, 2);
    const auto problem = build_stopping(m, Theta{Policy::uniform(m), StateSet::none(m.num_states())}, J);
    const auto sol = solve_stopping(problem);
    for (std::size_t z = 0; z + 1 < problem.num_states(); ++z) {
        CHECK_FALSE(problem.can_continue(z));
        CHECK(sol.V[z] == J[problem.pair_state(z).x]);
    }
    CHECK(sol.V[problem.terminal_state()] == 0.0);
    CHECK(sup_distance(reconstruct_q(problem, sol.V), h_backup(m, J)) < 1e-14);
}

TEST_CASE("stopping operator equals the Bellman operator of the stopping model") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rm = random_model(seed, RandomModelParams{.num_states = 4, .regime = Regime::nonnegative});
        const auto& m = rm.model;
        SeededUniform rng(seed);
        const Theta theta{testing::random_deterministic(rng, m), testing::random_set(rng, m.num_states())};
        const ValueVector J = testing::random_values(rng, m.num_states(), 0, 2);
        const auto problem = build_stopping(m, theta, J);
        const TotalCostModel sm = problem.as_model();
        std::vector<ExtReal> V(problem.num_states());
        for (auto& v : V) v = rng.uniform(0, 2);
        V[problem.terminal_state()] = 0.0;
        const auto out = t_o_apply(problem, V);
        const ValueVector ref = bellman_T(sm, ValueVector(V));
        for (std::size_t z = 0; z < problem.num_states(); ++z) CHECK(out[z] == ref[z]);

        std::vector<ExtReal> capped(problem.num_states());
        for (std::size_t z = 0; z < problem.num_states(); ++z)
            capped[z] = z == problem.terminal_state() ? ExtReal(0.0) : problem.stop_cost(z);
        const auto once = t_o_apply(problem, capped);
        for (std::size_t z = 0; z < problem.num_states(); ++z) CHECK(once[z] <= capped[z]);
    }
}

TEST_CASE("stopping solution continuation values are the F_theta fixed point on B") {
    for (auto regime : {Regime::discounted, Regime::nonpositive, Regime::nonnegative}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto rm = random_model(seed, RandomModelParams{.num_states = 5, .regime = regime});
            const auto& m = rm.model;
            SeededUniform rng(seed * 7);
            const Theta theta{testing::random_deterministic(rng, m), testing::random_set(rng, m.num_states())};
            const double lo = regime == Regime::nonnegative ? 0.0 : -2.0;
            const double hi = regime == Regime::nonpositive ? 0.0 : 2.0;
            const ValueVector J = testing::random_values(rng, m.num_states(), lo, hi);
            FixedPointOptions fo;
            fo.tolerance = 1e-13;
            const auto problem = build_stopping(m, theta, J);
            const auto sol = solve_stopping(problem, fo);
            const auto fp = q_fixed_point(m, theta, J, fo);
            const QVector F = f_theta_apply(m, theta, sol.f, J);
            for (std::size_t i = 0; i < m.num_pairs(); ++i) {
                if (!sol.continuation_pairs.contains(i)) continue;
                CHECK(abs_diff(sol.f[i], fp.Q[i]) < 1e-9);
                CHECK(abs_diff(F[i], sol.f[i]) < 1e-9);
            }
            CHECK(sup_distance(reconstruct_q(problem, sol.V), fp.Q) < 1e-9);
        }
    }
}

TEST_CASE("pairs outside the control graph are never reached") {
    const auto rm = random_model(6, RandomModelParams{.num_states = 5, .regime = Regime::nonnegative});
    SeededUniform rng(6);
    const Theta theta{testing::random_deterministic(rng, rm.model), StateSet::all(5)};
    const auto problem = build_stopping(rm.model, theta, rm.Jstar);
    for (std::size_t z = 0; z < problem.num_states(); ++z) {
        if (problem.pair_state(z).kind == PairStateKind::outside_graph || z == problem.terminal_state()) continue;
        if (!problem.can_continue(z)) continue;
        for (const auto& t : problem.continue_row(z))
            if (t.prob > 0) CHECK(problem.pair_state(t.target).kind != PairStateKind::outside_graph);
    }
}

TEST_CASE("stopping linear program bound") {
    P2 p;
    const auto lp = lp_upper_bound(p.f.model, Theta{p.go, StateSet::of(2, {1})}, p.f.Jstar);
    CHECK(lp.W[1] == 0.0);
    CHECK(lp.Qbar == QVector{0.0, 0.0, 1.0});

    const auto empty = lp_upper_bound(p.f.model, Theta{p.go, StateSet::none(2)}, ValueVector{0.0, 0.5});
    CHECK(empty.Qbar == h_backup(p.f.model, ValueVector{0.0, 0.5}));

    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto rm = random_model(seed, RandomModelParams{.num_states = 5, .regime = Regime::nonnegative});
        const auto& m = rm.model;
        SeededUniform rng(seed * 11);
        const Theta theta{testing::random_deterministic(rng, m), testing::random_set(rng, m.num_states())};
        const ValueVector J = testing::random_values(rng, m.num_states(), 0, 2);
        const auto b = lp_upper_bound(m, theta, J);
        FixedPointOptions fo;
        fo.tolerance = 1e-14;
        CHECK(all_leq(q_fixed_point(m, theta, J, fo).Q, b.Qbar, 1e-10));
        CHECK(all_leq(b.Qbar, f_theta_apply(m, theta, b.Qbar, J), 1e-10));
        CHECK(b.certificate.holds(1e-10));

        // maximality: raising any W(x), x in B, by 1e-6 breaks a constraint
        const auto controls = theta.policy.controls();
        auto feasible = [&](const ValueVector& W) {
            for (std::size_t x : theta.B.elements()) {
                if (W[x].value() > J[x].value() + 1e-12) return false;
                const auto& c = m.control(x, controls[x]);
                double rhs = c.cost.value();
                for (const auto& t : c.transitions) rhs += t.prob * W[t.target].value();
                if (W[x].value() > rhs + 1e-12) return false;
            }
            return true;
        };
        CHECK(feasible(b.W));
        for (std::size_t x : theta.B.elements()) {
            ValueVector up = b.W;
            up[x] += 1e-6;
            CHECK_FALSE(feasible(up));
        }
    }
}
