#include "mvpi/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mvpi/chain.hpp"
#include "mvpi/evaluation.hpp"
#include "mvpi/ftheta.hpp"
#include "mvpi/models.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/stopping.hpp"

namespace mvpi {

GroundTruth default_truth(const TotalCostModel& model) {
    GroundTruth t;
    t.J = optimal_cost_oracle(model);
    if (!model.has_families()) t.Q = h_backup(model, t.J);
    return t;
}

bool ScenarioReport::passed() const noexcept {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const ScenarioCheck& c) { return c.passed; });
}

std::string ScenarioReport::to_string() const {
    std::string s = name + ": " + title + "\n";
    for (const auto& c : checks) {
        s += std::string(c.passed ? "  PASS  " : "  FAIL  ") + c.label + "\n";
        s += "        expected (" + c.basis + "): " + c.expected + "\n";
        s += "        computed: " + c.computed + "\n";
    }
    for (const auto& n : notes) s += "  note: " + n + "\n";
    s += std::string("  result: ") + (passed() ? "PASS" : "FAIL") + "\n";
    return s;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sci(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

class Builder {
public:
    Builder(std::string name, std::string title) {
        r_.name = std::move(name);
        r_.title = std::move(title);
    }
    bool check(std::string label, std::string expected, std::string computed, std::string basis, bool passed) {
        r_.checks.push_back({std::move(label), std::move(expected), std::move(computed), std::move(basis), passed});
        return passed;
    }
    void note(std::string n) { r_.notes.push_back(std::move(n)); }
    ScenarioReport done() { return std::move(r_); }

private:
    ScenarioReport r_;
};

struct Instance {
    std::string label;
    TotalCostModel model;
    GroundTruth truth;
    /// Closed-form instances are compared without slack.
    bool exact = false;
};

std::vector<Instance> random_suite(Regime regime, const ScenarioOptions& o, std::uint64_t offset,
                                   std::size_t count) {
    RandomModelParams p;
    p.regime = regime;
    std::vector<Instance> out;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t seed = o.seed + offset + i;
        auto rm = random_model(seed, p);
        GroundTruth truth = o.oracle(rm.model);
        out.push_back({"seed " + std::to_string(seed), std::move(rm.model), std::move(truth), false});
    }
    return out;
}

Instance closed_form(const std::string& name) {
    Fixture f = fixture(name);
    return {name, std::move(f.model), GroundTruth{f.Jstar, f.Qstar}, true};
}

Instance oracle_fixture(const std::string& name, const ScenarioOptions& o) {
    Fixture f = fixture(name);
    GroundTruth t = o.oracle(f.model);
    return {name, std::move(f.model), std::move(t), false};
}

/// Tracks the worst value of a per-instance quantity.
struct Worst {
    double value = -kInf;
    std::string where = "-";
    void see(double v, const std::string& w) {
        if (v > value || where == "-") {
            if (v > value) {
                value = v;
                where = w;
            }
        }
    }
    std::string str() const { return sci(value) + " (" + where + ")"; }
};

template <class Tag>
double violation(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    return leq_violation(a, b);
}

ValueVector uniform_vector(SeededUniform& rng, std::size_t n, double lo, double hi) {
    ValueVector v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

QVector uniform_q(SeededUniform& rng, std::size_t n, double lo, double hi) {
    QVector v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

StateSet random_subset(SeededUniform& rng, std::size_t n) {
    std::vector<bool> m(n);
    for (std::size_t x = 0; x < n; ++x) m[x] = rng.next() < 0.5;
    return StateSet(std::move(m));
}

Policy random_policy(SeededUniform& rng, const TotalCostModel& model, bool randomized) {
    std::vector<Policy::Action> actions;
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        std::vector<double> d(model.num_controls(x), 0.0);
        if (randomized) {
            double total = 0.0;
            for (auto& p : d) total += (p = rng.uniform(0.1, 1.0));
            for (auto& p : d) p /= total;
        } else {
            d[rng.index(d.size())] = 1.0;
        }
        actions.emplace_back(std::move(d));
    }
    return Policy(std::move(actions));
}

// ---------------------------------------------------------------------------

ScenarioReport footnote8(const ScenarioOptions&) {
    Builder b("footnote8", "nonpositive model: a policy attaining the minimum in T(J*) is not optimal");
    const Fixture f = fixture("FX-N2");
    const ValueVector expected{0.0, -1.0};
    b.check("J*", "(0, -1)", to_string(f.Jstar), "closed form", f.Jstar == expected);
    const auto vi = value_iteration(f.model, ValueVector(2, 0.0));
    b.check("lim T^k(0)", "(0, -1)", to_string(vi.final_J()), "closed form", vi.final_J() == expected);
    const ValueVector TJ = bellman_T(f.model, f.Jstar);
    b.check("T(J*) = J*", to_string(f.Jstar), to_string(TJ), "identity", TJ == f.Jstar);
    const Policy stay = Policy::deterministic(f.model, {0, 0});
    const ValueVector TmuJ = bellman_T_mu(f.model, stay, f.Jstar);
    b.check("T_mu(J*) = T(J*) for mu = stay", to_string(TJ), to_string(TmuJ), "closed form", TmuJ == TJ);
    const ValueVector Jmu = evaluate_policy(f.model, stay).value;
    b.check("J_mu for mu = stay", "(0, 0)", to_string(Jmu), "closed form", Jmu == ValueVector{0.0, 0.0});
    return b.done();
}

ScenarioReport footnote9(const ScenarioOptions&) {
    Builder b("footnote9", "nonnegative model: policy iteration is stuck, the mixed method converges");
    const Fixture f = fixture("FX-P2");
    const Policy go = Policy::deterministic(f.model, {0, 1});
    SolverConfig cfg;
    cfg.ground_truth = GroundTruth{f.Jstar, f.Qstar};
    const auto pi = policy_iteration(f.model, go, cfg);
    b.check("policy iteration from mu(1) = go", "stuck", to_string(pi.termination), "closed form",
            pi.termination == Termination::stuck);
    b.check("J_mu where it stops", "(0, 1)", to_string(pi.final_J()), "closed form",
            pi.final_J() == ValueVector{0.0, 1.0});
    b.check("J*", "(0, 0)", to_string(f.Jstar), "closed form", f.Jstar == ValueVector{0.0, 0.0});

    SolverConfig m = cfg;
    m.j0 = ValueVector(2, 0.0);
    m.q0 = h_backup(f.model, *m.j0);
    m.mu0 = go;
    m.tolerance = 1e-10;
    m.max_iterations = 5;
    const auto run = mixed_vpi(f.model, m);
    b.check("mixed method converges within 5 iterations", "converged, k <= 5",
            std::string(to_string(run.termination)) + ", k = " + std::to_string(run.iterations()), "bound",
            run.converged() && run.iterations() <= 5);
    const double res = run.trace.back().residual.value_or(kInf);
    b.check("final residual", "< 1e-10", sci(res), "bound", res < 1e-10);
    const double d = std::max(sup_distance(run.final_J(), f.Jstar), sup_distance(run.Q.back(), *f.Qstar));
    b.check("(J_k, Q_k) -> (J*, Q*)", "(0, 0), (0, 0, 1)", to_string(run.final_J()) + ", " + to_string(run.Q.back()),
            "closed form", d < 1e-10);
    return b.done();
}

ScenarioReport cor51_gap(const ScenarioOptions&) {
    Builder b("cor51-gap", "continuum of controls: value iteration from 0 stops short of J*");
    const Fixture f = fixture("FX-P3a");
    const auto vi = value_iteration(f.model, ValueVector(3, 0.0));
    const ValueVector& Jinf = vi.final_J();
    b.check("lim T^k(0)", "(0, inf, 0)", to_string(Jinf), "closed form",
            vi.converged() && Jinf == ValueVector{0.0, ExtReal::inf(), 0.0});
    const ValueVector TJ = bellman_T(f.model, f.Jstar);
    b.check("T fixes J* = (0, inf, 1)", "(0, inf, 1)", to_string(TJ), "closed form",
            TJ == ValueVector{0.0, ExtReal::inf(), 1.0});
    const ExtReal gap = f.Jstar[2] - Jinf[2];
    b.check("J*(2) - J_inf(2)", "1", to_string(gap), "closed form", gap == 1.0);
    const auto down = value_iteration(f.model, scaled(f.Jstar, 2.0));
    b.check("lim T^k(2 J*)", "(0, inf, 1)", to_string(down.final_J()), "closed form", down.final_J() == f.Jstar);
    return b.done();
}

ScenarioReport prop51_fixedpoints(const ScenarioOptions&) {
    Builder b("prop51-fixedpoints", "continuum of controls: every stationary policy cost is a fixed point of T");
    const Fixture f = fixture("FX-P3b");
    const ValueVector Jmu_expected{0.0, 1.0, 2.0};
    std::string bad_eval, bad_fixed;
    for (int i = 1; i <= 9; ++i) {
        const double u = i / 10.0;
        const Policy mu(std::vector<Policy::Action>{std::vector<double>{1.0}, FamilyChoice{0, u},
                                                    std::vector<double>{1.0}});
        const ValueVector Jmu = evaluate_policy(f.model, mu).value;
        if (Jmu != Jmu_expected) bad_eval += " u=" + sci(u) + ":" + to_string(Jmu);
        if (bellman_T(f.model, Jmu) != Jmu) bad_fixed += " u=" + sci(u);
    }
    b.check("J_mu for u in {0.1, ..., 0.9}", "(0, 1, 2) for all 9", bad_eval.empty() ? "(0, 1, 2) for all 9" : bad_eval,
            "closed form", bad_eval.empty());
    b.check("T(J_mu) = J_mu for every u", "all 9", bad_fixed.empty() ? "all 9" : "fails for" + bad_fixed, "closed form",
            bad_fixed.empty());
    b.check("J*", "(0, 0, 1)", to_string(f.Jstar), "closed form", f.Jstar == ValueVector{0.0, 0.0, 1.0});
    ValueVector J(3, 0.0);
    std::string bad_power;
    for (int k = 1; k <= 10; ++k) {
        J = bellman_T(f.model, J);
        if (J != f.Jstar) bad_power += " k=" + std::to_string(k) + ":" + to_string(J);
    }
    b.check("T^k(0) = J* for k = 1..10", "(0, 0, 1)", bad_power.empty() ? "(0, 0, 1) for every k" : bad_power,
            "closed form", bad_power.empty());
    const auto vi = value_iteration(f.model, Jmu_expected);
    bool constant = true;
    for (const auto& Jk : vi.J) constant = constant && Jk == Jmu_expected;
    b.check("value iteration from J_mu", "J_k = (0, 1, 2) for all k", to_string(vi.final_J()), "closed form",
            constant);
    return b.done();
}

TailConstantVector ladder_vector(std::vector<std::int64_t> prefix, ExtInt tail) {
    std::vector<ExtInt> p(prefix.begin(), prefix.end());
    return TailConstantVector(std::move(p), tail);
}

ScenarioReport example51(const ScenarioOptions&) {
    Builder b("example51", "countable ladder model: transfinite value iteration levels");
    TailConstantVector J = ladder_vector({}, 0);
    std::string bad;
    for (int k = 1; k <= 8; ++k) {
        J = ladder_T(J);
        std::vector<std::int64_t> expect{0};
        for (int i = 0; i < k; ++i) expect.push_back(1);
        const auto e = ladder_vector(expect, 0);
        b.note("T^" + std::to_string(k) + "(0) = " + J.describe());
        if (!(J == e)) bad += " k=" + std::to_string(k) + ":" + J.describe();
    }
    b.check("T^k(0) has exactly k ones, k = 1..8", "(0, 1, ..., 1, 0, 0, ...)", bad.empty() ? "all 8 match" : bad,
            "closed form", bad.empty());

    const auto l0 = ladder_level(0);
    b.check("level 0 = lim T^k(0)", "(0, 1, 1, ...)", l0.describe(), "closed form", l0 == ladder_vector({0}, 1));
    const auto l1 = ladder_level(1);
    b.check("level 1", "(1, 2, 2, ...)", l1.describe(), "closed form", l1 == ladder_vector({1}, 2));
    std::string bad_step;
    TailConstantVector prev = l0;
    for (std::size_t m = 0; m <= 10; ++m) {
        const auto next = ladder_level(m + 1);
        if (m <= 5) b.note("level " + std::to_string(m) + " = " + prev.describe());
        if (!(next == prev.plus(1))) bad_step += " m=" + std::to_string(m);
        prev = next;
    }
    b.check("level m+1 = level m + 1, m = 0..10", "exact integers", bad_step.empty() ? "all 11 steps" : bad_step,
            "closed form", bad_step.empty());
    const auto l5 = ladder_level(5);
    b.check("level 5", "(5, 6, 6, ...)", l5.describe(), "closed form", l5 == ladder_vector({5}, 6));
    const auto all_inf = ladder_vector({}, ExtInt::inf());
    b.check("T fixes the all-inf vector", "(inf, inf, ...)", ladder_T(all_inf).describe(), "closed form",
            ladder_T(all_inf) == all_inf);
    return b.done();
}

ScenarioReport theorem41_rate(const ScenarioOptions& o) {
    Builder b("theorem41-rate", "discounted: geometric rate of the mixed method under both update rules");
    std::vector<Instance> suite;
    suite.push_back(oracle_fixture("FX-D", o));
    for (auto& i : random_suite(Regime::discounted, o, 0, o.random_models)) suite.push_back(std::move(i));

    Worst worst_power, worst_exact;
    std::size_t runs = 0;
    for (std::size_t idx = 0; idx < suite.size(); ++idx) {
        const auto& inst = suite[idx];
        const auto& m = inst.model;
        SeededUniform rng(o.seed * 7 + idx);
        for (int rule = 0; rule < 2; ++rule) {
            SolverConfig cfg;
            cfg.j0 = uniform_vector(rng, m.num_states(), -2.0, 2.0);
            cfg.q0 = uniform_q(rng, m.num_pairs(), -2.0, 2.0);
            cfg.max_iterations = 100;
            cfg.min_iterations = 100;
            cfg.track_vi_bound = false;
            if (rule == 0) {
                cfg.nk = NkSchedule::constant(3);
                CustomSubsets cs;
                for (int k = 0; k < 100; ++k) cs.subsets.push_back(random_subset(rng, m.num_states()));
                cfg.b_strategy = cs;
            } else {
                cfg.nk = NkSchedule::exact();
                cfg.inner.tolerance = 1e-14;
            }
            const auto run = mixed_vpi(m, cfg);
            ++runs;
            const double delta =
                std::max(sup_distance(*cfg.j0, inst.truth.J), sup_distance(*cfg.q0, *inst.truth.Q));
            double excess = -kInf;
            for (std::size_t k = 0; k < run.J.size(); ++k) {
                const double e =
                    std::max(sup_distance(run.J[k], inst.truth.J), sup_distance(run.Q[k], *inst.truth.Q));
                excess = std::max(excess, e - std::pow(m.discount(), static_cast<double>(k)) * delta);
            }
            (rule == 0 ? worst_power : worst_exact).see(excess, inst.label);
        }
    }
    b.check("max_k (err_k - alpha^k Delta), Q_{k+1} = F^3(Q_k; J_k), random B_k", "<= 1e-12", worst_power.str(),
            "bound", worst_power.value <= 1e-12);
    b.check("max_k (err_k - alpha^k Delta), Q_{k+1} = Q_{theta_k, J_k}", "<= 1e-12", worst_exact.str(), "bound",
            worst_exact.value <= 1e-12);
    b.note(std::to_string(runs) + " runs of 100 iterations over FX-D and " + std::to_string(o.random_models) +
           " random discounted models");
    return b.done();
}

ScenarioReport theorem42(const ScenarioOptions& o) {
    Builder b("theorem42", "nonpositive: mixed method from (0, 0) stays in the sandwich and converges");
    std::vector<Instance> suite;
    suite.push_back(closed_form("FX-N2"));
    for (auto& i : random_suite(Regime::nonpositive, o, 1000, o.random_models)) suite.push_back(std::move(i));

    Worst sandwich, dist;
    for (const auto& inst : suite) {
        SolverConfig cfg;
        cfg.j0 = ValueVector(inst.model.num_states(), 0.0);
        cfg.q0 = QVector(inst.model.num_pairs(), 0.0);
        cfg.tolerance = 1e-13;
        cfg.max_iterations = 20000;
        const auto run = mixed_vpi(inst.model, cfg);
        double v = 0.0;
        for (std::size_t k = 0; k < run.J.size(); ++k) {
            v = std::max(v, violation(inst.truth.J, run.J[k]));
            v = std::max(v, violation(*inst.truth.Q, run.Q[k]));
            v = std::max(v, violation(run.J[k], run.vi_bound[k]));
        }
        if (inst.exact && v > 0.0) v = kInf;
        sandwich.see(v, inst.label);
        dist.see(std::max(sup_distance(run.final_J(), inst.truth.J), sup_distance(run.Q.back(), *inst.truth.Q)),
                 inst.label);
    }
    b.check("max violation of J* <= J_k <= T^k(0), Q* <= Q_k", "0 (FX-N2), <= 1e-12 (random)", sandwich.str(),
            "bound", sandwich.value <= 1e-12);
    b.check("final ||(J_k, Q_k) - (J*, Q*)||", "< 1e-9", dist.str(), "oracle", dist.value < 1e-9);
    return b.done();
}

ScenarioReport theorem51(const ScenarioOptions& o) {
    Builder b("theorem51", "nonnegative: value iteration inside and outside the cJ* cone");
    std::vector<Instance> suite;
    suite.push_back(closed_form("FX-P4"));
    for (auto& i : random_suite(Regime::nonnegative, o, 2000, o.random_models)) suite.push_back(std::move(i));

    Worst rise, down_dist, inside_dist;
    for (std::size_t idx = 0; idx < suite.size(); ++idx) {
        const auto& inst = suite[idx];
        SolverConfig cfg;
        cfg.tolerance = 1e-13;
        cfg.max_iterations = 100000;
        const auto down = value_iteration(inst.model, scaled(inst.truth.J, 1.5), cfg);
        double up = 0.0;
        for (std::size_t k = 1; k < down.J.size(); ++k) up = std::max(up, violation(down.J[k], down.J[k - 1]));
        if (inst.exact && up > 0.0) up = kInf;
        rise.see(up, inst.label);
        down_dist.see(sup_distance(down.final_J(), inst.truth.J), inst.label);

        SeededUniform rng(o.seed * 11 + idx);
        ValueVector J0(inst.model.num_states());
        for (std::size_t x = 0; x < J0.size(); ++x) J0[x] = ExtReal(rng.uniform(0.0, 1.5)) * inst.truth.J[x];
        const auto inside = value_iteration(inst.model, J0, cfg);
        inside_dist.see(sup_distance(inside.final_J(), inst.truth.J), inst.label);
    }
    b.check("T^k(1.5 J*) nonincreasing: max (J_{k+1} - J_k)^+", "0 (FX-P4), <= 1e-12 (random)", rise.str(), "bound",
            rise.value <= 1e-12);
    b.check("||lim T^k(1.5 J*) - J*||", "< 1e-9", down_dist.str(), "oracle", down_dist.value < 1e-9);
    b.check("||lim T^k(J) - J*|| for random 0 <= J <= 1.5 J*", "< 1e-9", inside_dist.str(), "oracle",
            inside_dist.value < 1e-9);

    const Fixture p2 = fixture("FX-P2");
    const GroundTruth truth{p2.Jstar, p2.Qstar};
    std::string bad;
    for (double t : {0.1, 0.25, 0.5, 0.75, 1.0}) {
        const ValueVector J{0.0, t};
        if (bellman_T(p2.model, J) != J) bad += " t=" + sci(t) + " not fixed;";
        const auto run = value_iteration(p2.model, J);
        const auto report = verify_certificates(p2.model, run, truth);
        const auto* cone = report.find("initial cone");
        if (!cone || cone->passed || cone->detail.find("state 1") == std::string::npos)
            bad += " t=" + sci(t) + " not flagged;";
    }
    b.check("FX-P2 fixed points (0, t), t in {0.1, 0.25, 0.5, 0.75, 1}", "T-fixed and outside every cJ* cone",
            bad.empty() ? "all 5 fixed, all flagged with witness state 1" : bad, "closed form", bad.empty());
    const auto zero_run = value_iteration(p2.model, ValueVector{0.0, 0.0});
    const auto zero_report = verify_certificates(p2.model, zero_run, truth);
    const auto* cone0 = zero_report.find("initial cone");
    b.check("FX-P2 fixed point (0, 0)", "inside the cone", cone0 ? cone0->detail : "missing", "closed form",
            cone0 && cone0->passed);
    return b.done();
}

ScenarioReport value_set_vi(const ScenarioOptions& o) {
    Builder b("value-set-vi", "nonnegative: value iteration from real J vanishing where J* vanishes");
    const auto suite = random_suite(Regime::nonnegative, o, 2000, o.random_models);
    Worst dist;
    std::size_t members = 0;
    for (std::size_t idx = 0; idx < suite.size(); ++idx) {
        const auto& inst = suite[idx];
        SeededUniform rng(o.seed * 13 + idx);
        ValueVector J0(inst.model.num_states());
        for (std::size_t x = 0; x < J0.size(); ++x) J0[x] = inst.truth.J[x] == 0.0 ? 0.0 : rng.uniform(0.0, 5.0);
        SolverConfig cfg;
        cfg.tolerance = 1e-13;
        cfg.max_iterations = 100000;
        const auto run = value_iteration(inst.model, J0, cfg);
        const auto report = verify_certificates(inst.model, run, inst.truth);
        const auto* mem = report.find("value set membership");
        if (mem && mem->passed) ++members;
        dist.see(sup_distance(run.final_J(), inst.truth.J), inst.label);
    }
    b.check("initial J in the value set", std::to_string(suite.size()) + " of " + std::to_string(suite.size()),
            std::to_string(members), "identity", members == suite.size());
    b.check("||lim T^k(J) - J*||", "< 1e-8", dist.str(), "oracle", dist.value < 1e-8);
    return b.done();
}

ScenarioReport theorem52(const ScenarioOptions& o) {
    Builder b("theorem52", "nonnegative: mixed method from J0 = 1.5 J* and from J0 <= 1.5 J*");
    std::vector<Instance> suite;
    suite.push_back(closed_form("FX-P4"));
    for (auto& i : random_suite(Regime::nonnegative, o, 2000, o.random_models)) suite.push_back(std::move(i));

    Worst dist_a, sandwich, dist_b, vi0;
    for (std::size_t idx = 0; idx < suite.size(); ++idx) {
        const auto& inst = suite[idx];
        SolverConfig cfg;
        cfg.tolerance = 1e-13;
        cfg.max_iterations = 20000;
        cfg.j0 = scaled(inst.truth.J, 1.5);
        cfg.q0 = h_backup(inst.model, *cfg.j0);
        const auto run = mixed_vpi(inst.model, cfg);
        dist_a.see(std::max(sup_distance(run.final_J(), inst.truth.J), sup_distance(run.Q.back(), *inst.truth.Q)),
                   inst.label);
        double v = 0.0;
        for (std::size_t k = 0; k < run.J.size(); ++k) {
            v = std::max(v, violation(inst.truth.J, run.J[k]));
            v = std::max(v, violation(*inst.truth.Q, run.Q[k]));
            v = std::max(v, violation(run.J[k], run.vi_bound[k]));
        }
        if (inst.exact && v > 0.0) v = kInf;
        sandwich.see(v, inst.label);

        SolverConfig vcfg;
        vcfg.tolerance = 1e-13;
        vcfg.max_iterations = 100000;
        vi0.see(sup_distance(value_iteration(inst.model, ValueVector(inst.model.num_states(), 0.0), vcfg).final_J(),
                             inst.truth.J),
                inst.label);

        SeededUniform rng(o.seed * 17 + idx);
        SolverConfig rcfg = cfg;
        ValueVector J0(inst.model.num_states());
        for (std::size_t x = 0; x < J0.size(); ++x) J0[x] = ExtReal(rng.uniform(0.0, 1.5)) * inst.truth.J[x];
        rcfg.j0 = J0;
        rcfg.q0 = h_backup(inst.model, J0);
        const auto relaxed = mixed_vpi(inst.model, rcfg);
        dist_b.see(std::max(sup_distance(relaxed.final_J(), inst.truth.J),
                            sup_distance(relaxed.Q.back(), *inst.truth.Q)),
                   inst.label);
    }
    b.check("J0 = 1.5 J*, Q0 = h(J0): final ||(J_k, Q_k) - (J*, Q*)||", "< 1e-8", dist_a.str(), "oracle",
            dist_a.value < 1e-8);
    b.check("max violation of J* <= J_k <= T^k(J0), Q* <= Q_k", "0 (FX-P4), <= 1e-12 (random)", sandwich.str(),
            "bound", sandwich.value <= 1e-12);
    b.check("T^k(0) -> J*", "< 1e-9", vi0.str(), "oracle", vi0.value < 1e-9);
    b.check("random 0 <= J0 <= 1.5 J*, Q0 = h(J0): final distance", "< 1e-8", dist_b.str(), "oracle",
            dist_b.value < 1e-8);
    return b.done();
}

ScenarioReport theorem53(const ScenarioOptions& o) {
    Builder b("theorem53", "nonnegative: iteration with Q_{k+1} from the stopping linear program");
    std::vector<Instance> suite;
    suite.push_back(closed_form("FX-P4"));
    for (auto& i : random_suite(Regime::nonnegative, o, 2000, o.random_models)) suite.push_back(std::move(i));

    Worst dist, upper, lower, cone;
    for (const auto& inst : suite) {
        SolverConfig cfg;
        cfg.algorithm = Algorithm::lp_variant;
        cfg.tolerance = 1e-13;
        cfg.max_iterations = 2000;
        cfg.j0 = scaled(inst.truth.J, 1.5);
        cfg.q0 = h_backup(inst.model, *cfg.j0);
        cfg.ground_truth = inst.truth;
        const auto run = lp_variant_vpi(inst.model, cfg, 1.5);
        dist.see(std::max(sup_distance(run.final_J(), inst.truth.J), sup_distance(run.Q.back(), *inst.truth.Q)),
                 inst.label);
        double up = 0.0, lo = 0.0, cv = 0.0;
        const ValueVector bound = scaled(inst.truth.J, 1.5);
        for (std::size_t k = 0; k + 1 < run.J.size(); ++k) {
            const Theta theta{run.policies[k], run.subsets[k]};
            const QVector& Qbar = run.Q[k + 1];
            up = std::max(up, violation(Qbar, f_theta_apply(inst.model, theta, Qbar, run.J[k])));
            FixedPointOptions fo;
            fo.tolerance = 1e-14;
            lo = std::max(lo, violation(q_fixed_point(inst.model, theta, run.J[k], fo).Q, Qbar));
        }
        for (const auto& Jk : run.J) cv = std::max(cv, violation(Jk, bound));
        upper.see(up, inst.label);
        lower.see(lo, inst.label);
        cone.see(cv, inst.label);
    }
    b.check("final ||(J_k, Q_k) - (J*, Q*)||", "< 1e-8", dist.str(), "oracle", dist.value < 1e-8);
    b.check("max (Q_{k+1} - F_theta(Q_{k+1}; J_k))^+", "<= 1e-10", upper.str(), "bound", upper.value <= 1e-10);
    b.check("max (Q_{theta_k, J_k} - Q_{k+1})^+", "<= 1e-10", lower.str(), "bound", lower.value <= 1e-10);
    b.check("max (J_k - 1.5 J*)^+", "<= 1e-12", cone.str(), "bound", cone.value <= 1e-12);
    return b.done();
}

ScenarioReport lemmaA1_oracle(const ScenarioOptions& o) {
    Builder b("lemmaA1-oracle", "stopping-problem reconstruction agrees with the F_theta fixed point");
    const Regime regimes[] = {Regime::discounted, Regime::nonpositive, Regime::nonnegative};
    for (std::size_t ri = 0; ri < 3; ++ri) {
        const Regime regime = regimes[ri];
        Worst agree, at_opt;
        RandomModelParams p;
        p.regime = regime;
        p.num_states = 5;
        for (std::size_t i = 0; i < o.triples; ++i) {
            const std::uint64_t seed = o.seed + 5000 + 1000 * ri + i;
            const auto rm = random_model(seed, p);
            const auto& m = rm.model;
            SeededUniform rng(seed * 31 + 7);
            const Theta theta{random_policy(rng, m, i % 2 == 1), random_subset(rng, m.num_states())};
            const double lo = regime == Regime::nonnegative ? 0.0 : -2.0;
            const double hi = regime == Regime::nonpositive ? 0.0 : 2.0;
            const ValueVector J = uniform_vector(rng, m.num_states(), lo, hi);
            FixedPointOptions fo;
            fo.tolerance = 1e-13;
            fo.max_iterations = 1000000;
            const auto fp = q_fixed_point(m, theta, J, fo);
            const auto problem = build_stopping(m, theta, J);
            const auto sol = solve_stopping(problem, fo);
            const auto rq = reconstruct_q(problem, sol.V);
            const std::string where = "seed " + std::to_string(seed);
            agree.see(sup_distance(fp.Q, rq), where);

            const GroundTruth truth = o.oracle(m);
            const auto fp_star = q_fixed_point(m, theta, truth.J, fo);
            const auto ps = build_stopping(m, theta, truth.J);
            const auto rq_star = reconstruct_q(ps, solve_stopping(ps, fo).V);
            at_opt.see(std::max(sup_distance(fp_star.Q, *truth.Q), sup_distance(rq_star, *truth.Q)), where);
        }
        const std::string tag = std::string("regime ") + regime_letter(regime) + ", " + std::to_string(o.triples) +
                                " triples";
        b.check(tag + ": ||reconstruct_q - q_fixed_point||", "< 1e-9", agree.str(), "identity", agree.value < 1e-9);
        b.check(tag + ": both at J = J* vs Q*", "< 1e-9", at_opt.str(), "oracle", at_opt.value < 1e-9);
    }
    return b.done();
}

ScenarioReport lemmaA2_bound(const ScenarioOptions& o) {
    Builder b("lemmaA2-bound", "stopping linear program: Q_{theta,J} <= Qbar <= F_theta(Qbar; J)");
    Worst upper, lower;
    RandomModelParams p;
    p.regime = Regime::nonnegative;
    p.num_states = 5;
    for (std::size_t i = 0; i < o.triples; ++i) {
        const std::uint64_t seed = o.seed + 9000 + i;
        const auto rm = random_model(seed, p);
        const auto& m = rm.model;
        SeededUniform rng(seed * 37 + 3);
        const Theta theta{random_policy(rng, m, false), random_subset(rng, m.num_states())};
        const ValueVector J = uniform_vector(rng, m.num_states(), 0.0, 2.0);
        const LpBound lp = lp_upper_bound(m, theta, J);
        const std::string where = "seed " + std::to_string(seed);
        upper.see(violation(lp.Qbar, f_theta_apply(m, theta, lp.Qbar, J)), where);
        FixedPointOptions fo;
        fo.tolerance = 1e-14;
        lower.see(violation(q_fixed_point(m, theta, J, fo).Q, lp.Qbar), where);
    }
    b.check("max (Qbar - F_theta(Qbar; J))^+ over " + std::to_string(o.triples) + " triples", "<= 1e-10", upper.str(),
            "bound", upper.value <= 1e-10);
    b.check("max (Q_{theta,J} - Qbar)^+ over " + std::to_string(o.triples) + " triples", "<= 1e-10", lower.str(),
            "bound", lower.value <= 1e-10);
    return b.done();
}

ScenarioReport footnote5_equiv(const ScenarioOptions&) {
    Builder b("footnote5-equiv", "mixed method with B = S and J = +inf start reproduces modified policy iteration");
    const Fixture f = fixture("FX-D");
    const auto& m = f.model;
    const std::size_t n = 4;
    const double c = 20.0;

    SolverConfig mixed;
    mixed.j0 = ValueVector(m.num_states(), ExtReal::inf());
    mixed.q0 = QVector(m.num_pairs(), c);
    mixed.nk = NkSchedule::list({n + 1, n});
    mixed.max_iterations = 30;
    mixed.min_iterations = 30;
    mixed.track_vi_bound = false;
    const auto a = mixed_vpi(m, mixed);

    SolverConfig mpi;
    mpi.max_iterations = 30;
    mpi.min_iterations = 30;
    std::vector<std::size_t> lowest(m.num_states(), 0);
    const auto r = modified_policy_iteration(m, Policy::deterministic(m, lowest), ValueVector(m.num_states(), c),
                                             NkSchedule::constant(n), mpi);

    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t k = 1; k <= 30 && k < a.J.size() && k < r.qform_J.size(); ++k) {
        worst = std::max(worst, sup_distance(a.J[k], r.qform_J[k]));
        ++compared;
    }
    b.check("iterations compared", "30", std::to_string(compared), "identity", compared == 30);
    b.check("max_k ||J_k(mixed) - T(V_k)(modified PI)||, k = 1..30", "<= 1e-12", sci(worst), "identity",
            worst <= 1e-12);
    bool same_policies = true;
    for (std::size_t k = 0; k < 30 && k < a.policies.size() && k < r.policies.size(); ++k)
        same_policies = same_policies && a.policies[k] == r.policies[k];
    b.check("policy sequences", "identical", same_policies ? "identical" : "differ", "identity", same_policies);
    b.note("V_0 = " + sci(c) + " on every state, n = " + std::to_string(n) + ", mixed schedule (n+1, n, n, ...)");
    return b.done();
}

ScenarioReport policy_extraction(const ScenarioOptions& o) {
    Builder b("policy-extraction", "discounted: greedy policies from Q_k meet the a-priori bound");
    std::vector<Instance> suite;
    suite.push_back(oracle_fixture("FX-D", o));
    for (auto& i : random_suite(Regime::discounted, o, 0, o.random_models)) suite.push_back(std::move(i));
    const double eps = 0.01;
    Worst excess, limsup;
    for (const auto& inst : suite) {
        const auto& m = inst.model;
        SolverConfig cfg;
        cfg.j0 = ValueVector(m.num_states(), 0.0);
        cfg.q0 = QVector(m.num_pairs(), 0.0);
        cfg.nk = NkSchedule::constant(1);
        cfg.max_iterations = 100;
        cfg.min_iterations = 100;
        cfg.track_vi_bound = false;
        const auto run = mixed_vpi(m, cfg);
        const double delta = std::max(sup_distance(*cfg.j0, inst.truth.J), sup_distance(*cfg.q0, *inst.truth.Q));
        double worst = -kInf;
        for (std::size_t k = 0; k < run.Q.size(); ++k) {
            const auto nu = extract_policy_discounted(m, run.Q[k], eps, k, delta);
            const double d = sup_distance(evaluate_policy(m, nu.policy).value, inst.truth.J);
            worst = std::max(worst, d - *nu.bound);
            if (k == 100) limsup.see(d - eps / (1.0 - m.discount()), inst.label);
        }
        excess.see(worst, inst.label);
    }
    b.check("max_k (||J_nu_k - J*|| - (2 alpha^k Delta + eps)/(1 - alpha)), eps = 0.01", "<= 1e-9", excess.str(),
            "bound", excess.value <= 1e-9);
    b.check("k = 100: ||J_nu_k - J*|| - eps/(1 - alpha)", "<= 1e-9", limsup.str(), "bound", limsup.value <= 1e-9);
    return b.done();
}

ScenarioReport lemmaE1(const ScenarioOptions& o) {
    Builder b("lemmaE1", "nonnegative: E{J*(x_n)} vanishes along a near-optimal policy");
    std::vector<Instance> suite;
    suite.push_back(closed_form("FX-P4"));
    for (auto& i : random_suite(Regime::nonnegative, o, 2000, o.random_models)) suite.push_back(std::move(i));
    Worst worst;
    for (const auto& inst : suite) {
        const auto& m = inst.model;
        const Policy pi = greedy_select(m, h_backup(m, scaled(inst.truth.J, 1.5)));
        const std::vector<double> initial(m.num_states(), 1.0 / static_cast<double>(m.num_states()));
        double top = 1.0;
        for (auto v : inst.truth.J) top = std::max(top, v.value());
        // every control of the random suite reaches state 0 with probability >= 0.1 per step
        std::size_t horizon = m.num_states();
        if (!inst.exact) horizon = static_cast<std::size_t>(std::ceil(std::log(1e-7 / top) / std::log(0.9)));
        double e = 0.0;
        for (std::size_t n : {horizon, horizon + 10})
            e = std::max(e, expected_value_at_stage(m, pi, initial, n, inst.truth.J).value());
        worst.see(e, inst.label + ", n >= " + std::to_string(horizon));
    }
    b.check("max E{J*(x_n)} past the absorption horizon", "< 1e-6", worst.str(), "bound", worst.value < 1e-6);
    return b.done();
}

ScenarioReport async_round_robin(const ScenarioOptions& o) {
    Builder b("async-round-robin", "discounted: one pair per update, cycling, reaches the synchronous limit");
    const Instance inst = oracle_fixture("FX-D", o);
    const auto& m = inst.model;
    SolverConfig cfg;
    cfg.j0 = ValueVector(m.num_states(), 0.0);
    cfg.q0 = QVector(m.num_pairs(), 0.0);
    cfg.nk = NkSchedule::constant(1);
    cfg.tolerance = 1e-14;
    cfg.max_iterations = 200000;
    cfg.track_vi_bound = false;
    SolverConfig async = cfg;
    async.async = AsyncSchedule::round_robin(m);
    const auto ra = mixed_vpi(m, async);
    const auto rs = mixed_vpi(m, cfg);
    const double da = std::max(sup_distance(ra.final_J(), inst.truth.J), sup_distance(ra.Q.back(), *inst.truth.Q));
    const double ds = std::max(sup_distance(ra.final_J(), rs.final_J()), sup_distance(ra.Q.back(), rs.Q.back()));
    b.check("asynchronous run", "converged", std::string(to_string(ra.termination)) + " after " +
                                                 std::to_string(ra.iterations()) + " single-pair updates",
            "identity", ra.converged());
    b.check("||(J, Q)_async - (J*, Q*)||", "< 1e-9", sci(da), "oracle", da < 1e-9);
    b.check("||(J, Q)_async - (J, Q)_sync||", "< 1e-9", sci(ds), "identity", rs.converged() && ds < 1e-9);
    return b.done();
}

using ScenarioFn = ScenarioReport (*)(const ScenarioOptions&);

const std::vector<std::pair<std::string, ScenarioFn>>& registry() {
    static const std::vector<std::pair<std::string, ScenarioFn>> r = {
        {"footnote8", footnote8},
        {"footnote9", footnote9},
        {"cor51-gap", cor51_gap},
        {"prop51-fixedpoints", prop51_fixedpoints},
        {"example51", example51},
        {"theorem41-rate", theorem41_rate},
        {"theorem42", theorem42},
        {"theorem51", theorem51},
        {"value-set-vi", value_set_vi},
        {"theorem52", theorem52},
        {"theorem53", theorem53},
        {"lemmaA1-oracle", lemmaA1_oracle},
        {"lemmaA2-bound", lemmaA2_bound},
        {"footnote5-equiv", footnote5_equiv},
        {"policy-extraction", policy_extraction},
        {"lemmaE1", lemmaE1},
        {"async-round-robin", async_round_robin},
    };
    return r;
}

} // namespace

std::vector<std::string> scenario_names() {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
}

ScenarioReport run_scenario(const std::string& name, const ScenarioOptions& options) {
    for (const auto& [n, fn] : registry()) {
        if (n != name) continue;
        try {
            return fn(options);
        } catch (const std::exception& e) {
            ScenarioReport r;
            r.name = name;
            r.title = "aborted";
            r.checks.push_back({"scenario completes", "no error", e.what(), "identity", false});
            return r;
        }
    }
    throw ConfigError("unknown scenario '" + name + "'");
}

} // namespace mvpi
