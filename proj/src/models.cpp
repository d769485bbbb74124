#include "mvpi/models.hpp"

#include <algorithm>
#include <map>

#include "mvpi/chain.hpp"
#include "mvpi/evaluation.hpp"
#include "mvpi/operators.hpp"

namespace mvpi {

namespace {

AtomicControl control(std::string id, ExtReal cost, std::vector<Transition> row) {
    return AtomicControl{std::move(id), cost, std::move(row)};
}

void verify_ground_truth(const Fixture& f) {
    const auto report = validate_model(f.model);
    if (!report.ok()) throw ModelError("fixture " + f.name + " is invalid: " + report.to_string());
    const ValueVector TJ = bellman_T(f.model, f.Jstar);
    if (sup_distance(TJ, f.Jstar) > 1e-12)
        throw ModelError("fixture " + f.name + ": declared J* is not a fixed point of T");
    if (f.Qstar && sup_distance(h_backup(f.model, f.Jstar), *f.Qstar) > 1e-12)
        throw ModelError("fixture " + f.name + ": declared Q* differs from the backup of J*");
}

Fixture make_n2() {
    StateSpec s0{"0", {control("loop", 0.0, {{0, 1.0}})}, {}};
    StateSpec s1{"1", {control("stay", 0.0, {{1, 1.0}}), control("go", -1.0, {{0, 1.0}})}, {}};
    Fixture f{"FX-N2", TotalCostModel({s0, s1}, 1.0, Regime::nonpositive), ValueVector{0.0, -1.0},
              QVector{0.0, -1.0, -1.0},
              "Nonpositive costs. At state 1, 'stay' loops at cost 0 and 'go' pays -1 and moves to the "
              "absorbing state 0. Both controls attain the minimum in T(J*), but the policy that always "
              "stays has cost 0, not -1."};
    return f;
}

Fixture make_p2() {
    StateSpec s0{"0", {control("loop", 0.0, {{0, 1.0}})}, {}};
    StateSpec s1{"1", {control("stay", 0.0, {{1, 1.0}}), control("go", 1.0, {{0, 1.0}})}, {}};
    Fixture f{"FX-P2", TotalCostModel({s0, s1}, 1.0, Regime::nonnegative), ValueVector{0.0, 0.0},
              QVector{0.0, 0.0, 1.0},
              "Nonnegative costs. At state 1, 'stay' loops at cost 0 and 'go' pays 1 and moves to state 0. "
              "The policy 'go' has cost (0, 1), satisfies T_mu(J_mu) = T(J_mu) and is not optimal; "
              "every (0, t) with t in [0, 1] is a fixed point of T."};
    return f;
}

Fixture make_p3a() {
    StateSpec s0{"0", {control("loop", 0.0, {{0, 1.0}})}, {}};
    StateSpec s1{"1", {control("loop", 1.0, {{1, 1.0}})}, {}};
    StateSpec s2;
    s2.name = "2";
    s2.controls.push_back(control("t", 1.0, {{0, 1.0}}));
    AffineFamily fam;
    fam.id = "u";
    fam.interval = Interval{0.0, 1.0, false, false};
    fam.transitions = {{0, 1.0, -1.0}, {1, 0.0, 1.0}};
    s2.families.push_back(fam);
    Fixture f{"FX-P3a", TotalCostModel({s0, s1, s2}, 1.0, Regime::nonnegative),
              ValueVector{0.0, ExtReal::inf(), 1.0}, std::nullopt,
              "Nonnegative costs. State 1 pays 1 forever. At state 2, control u in (0, 1) is free and moves "
              "to state 1 with probability u and to state 0 otherwise; 't' pays 1 and moves to 0. Value "
              "iteration from 0 gives 0 at state 2 for every k, while the optimal cost there is 1."};
    return f;
}

Fixture make_p3b() {
    StateSpec s0{"0", {control("loop", 0.0, {{0, 1.0}})}, {}};
    StateSpec s1;
    s1.name = "1";
    AffineFamily fam;
    fam.id = "u";
    fam.interval = Interval{0.0, 1.0, false, false};
    fam.c0 = 0.0;
    fam.c1 = 1.0;
    fam.transitions = {{0, 0.0, 1.0}, {1, 1.0, -1.0}};
    s1.families.push_back(fam);
    StateSpec s2{"2", {control("go", 1.0, {{1, 1.0}})}, {}};
    Fixture f{"FX-P3b", TotalCostModel({s0, s1, s2}, 1.0, Regime::nonnegative), ValueVector{0.0, 0.0, 1.0},
              std::nullopt,
              "Nonnegative costs. At state 1, control u in (0, 1) costs u and moves to state 0 with "
              "probability u, otherwise stays. Every stationary policy costs (0, 1, 2), which is also a "
              "fixed point of T; the optimal cost (0, 0, 1) is not attained by any stationary policy."};
    return f;
}

Fixture make_p4() {
    StateSpec s0{"0", {control("loop", 0.0, {{0, 1.0}})}, {}};
    StateSpec s1{"1", {control("down", 1.0, {{0, 1.0}})}, {}};
    StateSpec s2{"2", {control("down", 1.0, {{1, 1.0}})}, {}};
    Fixture f{"FX-P4", TotalCostModel({s0, s1, s2}, 1.0, Regime::nonnegative), ValueVector{0.0, 1.0, 2.0},
              QVector{0.0, 1.0, 2.0}, "Unit-cost chain 2 -> 1 -> 0 with state 0 absorbing and free."};
    return f;
}

Fixture make_d() {
    StateSpec s0{"0", {control("a", 1.0, {{0, 0.5}, {1, 0.5}}), control("b", 0.5, {{2, 1.0}})}, {}};
    StateSpec s1{"1", {control("a", -0.5, {{0, 0.25}, {2, 0.75}}), control("b", 0.0, {{1, 1.0}})}, {}};
    StateSpec s2{"2", {control("a", 0.25, {{0, 1.0}}), control("b", -1.0, {{1, 0.5}, {2, 0.5}})}, {}};
    TotalCostModel m({s0, s1, s2}, 0.9, Regime::discounted, 1.0);
    ValueVector J = optimal_cost_oracle(m);
    QVector Q = h_backup(m, J);
    Fixture f{"FX-D", std::move(m), std::move(J), std::move(Q),
              "Discounted three-state model, alpha = 0.9, costs in [-1, 1]. Optimal costs come from the "
              "value-iteration / policy-iteration oracle, not from a closed form."};
    return f;
}

} // namespace

std::vector<std::string> fixture_names() { return {"FX-N2", "FX-P2", "FX-P3a", "FX-P3b", "FX-P4", "FX-D"}; }

Fixture fixture(const std::string& name) {
    Fixture f;
    if (name == "FX-N2") f = make_n2();
    else if (name == "FX-P2") f = make_p2();
    else if (name == "FX-P3a") f = make_p3a();
    else if (name == "FX-P3b") f = make_p3b();
    else if (name == "FX-P4") f = make_p4();
    else if (name == "FX-D") f = make_d();
    else throw ModelError("unknown fixture '" + name + "'");
    verify_ground_truth(f);
    return f;
}

// ---------------------------------------------------------------------------

double SeededUniform::next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

std::size_t SeededUniform::index(std::size_t n) {
    const auto i = static_cast<std::size_t>(next() * static_cast<double>(n));
    return std::min(i, n - 1);
}

ValueVector optimal_cost_oracle(const TotalCostModel& model, double tolerance, std::size_t max_iterations) {
    const std::size_t n = model.num_states();
    const auto cls = limit_infinite_states(model);
    std::vector<bool> skip(n, false);
    if (cls)
        for (std::size_t x = 0; x < n; ++x) skip[x] = cls->pos_inf.contains(x) || cls->neg_inf.contains(x);

    ValueVector J(n, 0.0);
    if (cls) {
        for (std::size_t x = 0; x < n; ++x) {
            if (cls->pos_inf.contains(x)) J[x] = ExtReal::inf();
            else if (cls->neg_inf.contains(x)) J[x] = ExtReal::neg_inf();
        }
    }
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < max_iterations; ++k) {
        ValueVector next = bellman_T(model, J);
        r = sup_distance_excluding(next, J, skip);
        J = std::move(next);
        if (r < tolerance) break;
    }
    if (!(r < tolerance))
        throw ConvergenceError("optimal cost oracle: value iteration reached the cap", J.values(),
                               model.regime() == Regime::nonnegative ? BoundDirection::increasing
                               : model.regime() == Regime::nonpositive ? BoundDirection::decreasing
                                                                       : BoundDirection::none,
                               r);
    if (cls) {
        for (std::size_t x = 0; x < n; ++x) {
            if (cls->pos_inf.contains(x)) J[x] = ExtReal::inf();
            else if (cls->neg_inf.contains(x)) J[x] = ExtReal::neg_inf();
        }
    }
    if (model.has_families()) return J;
    for (auto v : J)
        if (!v.is_finite()) return J;

    // polish: exact policy iteration from the greedy policy
    auto mu = greedy_controls(model, h_backup(model, J));
    for (int round = 0; round < 100; ++round) {
        const auto ev = evaluate_policy(model, Policy::deterministic(model, mu));
        for (auto v : ev.value)
            if (!v.is_finite()) return J;
        const QVector Q = h_backup(model, ev.value);
        const ValueVector M = m_minimize(model, Q);
        bool changed = false;
        for (std::size_t x = 0; x < n; ++x) {
            if (Q[model.pair_index(x, mu[x])] <= M[x]) continue;
            for (std::size_t u = 0; u < model.num_controls(x); ++u)
                if (Q[model.pair_index(x, u)] <= M[x]) {
                    mu[x] = u;
                    break;
                }
            changed = true;
        }
        if (!changed) {
            if (sup_distance(ev.value, J) > 1e-6) return J;
            return ev.value;
        }
    }
    return J;
}

RandomModel random_model(std::uint64_t seed, const RandomModelParams& p) {
    if (p.num_states < 2) throw ConfigError("random model needs at least 2 states");
    if (p.controls_per_state < 1) throw ConfigError("random model needs at least 1 control per state");
    if (!(p.cost_range >= 0.0)) throw ConfigError("cost range must be nonnegative");
    if (p.max_successors < 1) throw ConfigError("random model needs at least 1 successor per control");
    SeededUniform rng(seed);
    const std::size_t n = p.num_states;
    const double b = p.cost_range;

    double alpha = 1.0;
    if (p.regime == Regime::discounted) {
        alpha = p.discount ? *p.discount : rng.uniform(0.5, 0.9);
        if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("discount must lie in [0, 1)");
    }

    std::vector<StateSpec> states(n);
    states[0].name = "0";
    states[0].controls.push_back(control("stay", 0.0, {{0, 1.0}}));
    for (std::size_t x = 1; x < n; ++x) {
        auto& s = states[x];
        s.name = std::to_string(x);
        const bool free_exit = p.regime == Regime::nonnegative && rng.next() < p.free_exit_probability;
        for (std::size_t u = 0; u < p.controls_per_state; ++u) {
            AtomicControl c;
            c.id = "u" + std::to_string(u);
            if (free_exit && u == 0) {
                c.cost = 0.0;
                c.transitions = {{0, 1.0}};
                s.controls.push_back(std::move(c));
                continue;
            }
            switch (p.regime) {
            case Regime::discounted: c.cost = rng.uniform(-b, b); break;
            case Regime::nonnegative: c.cost = rng.uniform(0.0, b); break;
            case Regime::nonpositive: c.cost = rng.uniform(-b, 0.0); break;
            }
            const std::size_t k = 1 + rng.index(p.max_successors);
            std::map<std::size_t, double> w;
            for (std::size_t i = 0; i < k; ++i) w[rng.index(n)] += rng.uniform(0.1, 1.0);
            const double keep = p.absorbing ? 1.0 - rng.uniform(0.1, 0.3) : 1.0;
            double total = 0.0;
            for (const auto& [y, v] : w) total += v;
            std::map<std::size_t, double> prob;
            double assigned = 0.0;
            auto last = std::prev(w.end());
            for (auto it = w.begin(); it != w.end(); ++it) {
                if (!p.absorbing && it == last) break;
                const double q = keep * it->second / total;
                prob[it->first] += q;
                assigned += q;
            }
            const std::size_t rest_target = p.absorbing ? 0 : last->first;
            prob[rest_target] += 1.0 - assigned;
            for (const auto& [y, q] : prob)
                if (q > 0.0) c.transitions.push_back({y, q});
            s.controls.push_back(std::move(c));
        }
    }
    std::optional<double> bound;
    if (p.regime == Regime::discounted) bound = b;
    RandomModel out{TotalCostModel(std::move(states), alpha, p.regime, bound), {}, {}, seed};
    out.Jstar = optimal_cost_oracle(out.model);
    out.Qstar = h_backup(out.model, out.Jstar);
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(ExtInt v) { return v.is_inf() ? "inf" : std::to_string(v.value()); }

TailConstantVector::TailConstantVector(std::vector<ExtInt> prefix, ExtInt tail)
    : prefix_(std::move(prefix)), tail_(tail) {
    while (!prefix_.empty() && prefix_.back() == tail_) prefix_.pop_back();
}

TailConstantVector TailConstantVector::plus(std::int64_t c) const {
    std::vector<ExtInt> p;
    for (auto v : prefix_) p.push_back(v + c);
    return TailConstantVector(std::move(p), tail_ + c);
}

std::string TailConstantVector::describe() const {
    std::string s = "(";
    for (auto v : prefix_) s += to_string(v) + ", ";
    s += to_string(tail_) + ", " + to_string(tail_) + ", ...)";
    return s;
}

TailConstantVector ladder_T(const TailConstantVector& J) {
    const std::size_t len = std::max<std::size_t>(J.prefix().size() + 1, 2);
    std::vector<ExtInt> out(len);
    ExtInt best = J.tail();
    for (std::size_t x = 1; x < J.prefix().size(); ++x) best = std::min(best, J.prefix()[x]);
    out[0] = best;
    for (std::size_t x = 1; x < len; ++x) out[x] = ExtInt(x == 1 ? 1 : 0) + J.at(x - 1);
    return TailConstantVector(std::move(out), J.tail());
}

TailConstantVector ladder_limit(const TailConstantVector& J, std::size_t cap) {
    // the iterates either repeat or grow by one copy of the last prefix entry per step
    auto grows = [](const TailConstantVector& a, const TailConstantVector& b) {
        if (a.prefix().empty() || !(a.tail() == b.tail())) return false;
        if (b.prefix().size() != a.prefix().size() + 1) return false;
        if (!std::equal(a.prefix().begin(), a.prefix().end(), b.prefix().begin())) return false;
        return b.prefix().back() == a.prefix().back();
    };
    TailConstantVector prev = J;
    std::size_t streak = 0;
    for (std::size_t k = 0; k < cap; ++k) {
        TailConstantVector next = ladder_T(prev);
        if (next == prev) return next;
        streak = grows(prev, next) ? streak + 1 : 0;
        if (streak >= 2) return TailConstantVector(next.prefix(), next.prefix().back());
        prev = std::move(next);
    }
    std::vector<ExtReal> last;
    for (auto v : prev.prefix()) last.push_back(v.is_inf() ? ExtReal::inf() : ExtReal(static_cast<double>(v.value())));
    throw ConvergenceError("no limit pattern detected", last, BoundDirection::none,
                           std::numeric_limits<double>::infinity());
}

TailConstantVector ladder_level(std::size_t m, std::size_t inner_cap) {
    TailConstantVector level = ladder_limit(TailConstantVector({}, 0), inner_cap);
    for (std::size_t i = 0; i < m; ++i) level = ladder_limit(level, inner_cap);
    return level;
}

} // namespace mvpi
