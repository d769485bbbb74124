#include "mvpi/stopping.hpp"

#include <algorithm>

#include "iteration.hpp"
#include "mvpi/chain.hpp"

namespace mvpi {

StoppingProblem::StoppingProblem(const TotalCostModel& model, const Theta& theta, const ValueVector& J)
    : base_(model), theta_(theta), J_(J) {
    model.require_atomic_only("the stopping problem");
    if (J.size() != model.num_states()) throw ModelError("value vector does not match the model's states");
    if (theta.B.universe() != model.num_states()) throw ModelError("state subset has the wrong universe size");
    require_valid_policy(model, theta.policy);

    switch (model.regime()) {
    case Regime::nonpositive: K_ = 0.0; break;
    case Regime::nonnegative: K_ = ExtReal::inf(); break;
    case Regime::discounted: {
        ExtReal k = model.max_abs_cost();
        for (auto v : J) k = max(k, max(v, -v));
        K_ = k;
        break;
    }
    }

    std::size_t max_controls = 0;
    for (std::size_t x = 0; x < model.num_states(); ++x) max_controls = std::max(max_controls, model.num_controls(x));

    for (std::size_t i = 0; i < model.num_pairs(); ++i) {
        const auto [x, u] = model.pair_at(i);
        states_.push_back({x, u, theta.B.contains(x) ? PairStateKind::stop_continue : PairStateKind::stop_only});
    }
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        if (!theta.B.contains(x)) continue;
        for (std::size_t u = model.num_controls(x); u < max_controls; ++u)
            states_.push_back({x, u, PairStateKind::outside_graph});
    }
    states_.push_back({0, 0, PairStateKind::absorbing});

    const std::size_t terminal = states_.size() - 1;
    rows_.resize(states_.size());
    for (std::size_t z = 0; z < model.num_pairs(); ++z) {
        const auto [x, u] = model.pair_at(z);
        std::vector<Transition> row;
        for (const auto& t : model.control(x, u).transitions) {
            if (t.prob <= 0.0) continue;
            for (std::size_t v = 0; v < model.num_controls(t.target); ++v) {
                const double p = theta.policy.probability(t.target, v);
                if (p > 0.0) row.push_back({model.pair_index(t.target, v), t.prob * p});
            }
        }
        rows_[z] = std::move(row);
    }
    for (std::size_t z = model.num_pairs(); z < terminal; ++z) rows_[z] = {{terminal, 1.0}};
    rows_[terminal] = {{terminal, 1.0}};
}

ExtReal StoppingProblem::stop_cost(std::size_t z) const {
    const auto& s = states_.at(z);
    return s.kind == PairStateKind::absorbing ? ExtReal(0.0) : J_[s.x];
}

ExtReal StoppingProblem::continue_cost(std::size_t z) const {
    const auto& s = states_.at(z);
    switch (s.kind) {
    case PairStateKind::stop_continue:
    case PairStateKind::stop_only: return base_.control(s.x, s.u).cost;
    case PairStateKind::outside_graph: return K_;
    case PairStateKind::absorbing: return 0.0;
    }
    return 0.0;
}

TotalCostModel StoppingProblem::as_model() const {
    const std::size_t terminal = terminal_state();
    std::vector<StateSpec> specs(states_.size());
    for (std::size_t z = 0; z < states_.size(); ++z) {
        const auto& s = states_[z];
        if (s.kind == PairStateKind::absorbing) {
            specs[z].name = "terminal";
            specs[z].controls.push_back({"stay", 0.0, {{terminal, 1.0}}});
            continue;
        }
        specs[z].name = std::to_string(s.x) + ":" + std::to_string(s.u);
        specs[z].controls.push_back({"stop", stop_cost(z), {{terminal, 1.0}}});
        if (can_continue(z)) specs[z].controls.push_back({"continue", continue_cost(z), rows_[z]});
    }
    std::optional<double> bound;
    if (base_.regime() == Regime::discounted && K_.is_finite()) bound = K_.value();
    return TotalCostModel(std::move(specs), base_.discount(), base_.regime(), bound);
}

StoppingProblem build_stopping(const TotalCostModel& model, const Theta& theta, const ValueVector& J) {
    return StoppingProblem(model, theta, J);
}

ExtReal continuation_value(const StoppingProblem& problem, std::size_t z, const std::vector<ExtReal>& V) {
    ExtReal s = 0.0;
    for (const auto& t : problem.continue_row(z)) s += ExtReal(t.prob) * V[t.target];
    return problem.continue_cost(z) + ExtReal(problem.discount()) * s;
}

std::vector<ExtReal> t_o_apply(const StoppingProblem& problem, const std::vector<ExtReal>& V) {
    if (V.size() != problem.num_states()) throw ModelError("stopping value vector has the wrong length");
    std::vector<ExtReal> out(V.size());
    for (std::size_t z = 0; z < V.size(); ++z) {
        if (problem.pair_state(z).kind == PairStateKind::absorbing) {
            out[z] = 0.0;
        } else if (problem.can_continue(z)) {
            out[z] = min(problem.stop_cost(z), continuation_value(problem, z, V));
        } else {
            out[z] = problem.stop_cost(z);
        }
    }
    return out;
}

StoppingSolution solve_stopping(const StoppingProblem& problem, const FixedPointOptions& options) {
    const std::size_t n = problem.num_states();
    const double alpha = problem.discount();
    std::vector<bool> skip(n, false);
    std::vector<ExtReal> inf_value(n, 0.0);
    if (alpha >= 1.0) {
        const auto cls = limit_infinite_states(problem.as_model());
        if (cls) {
            for (std::size_t z = 0; z < n; ++z) {
                if (cls->pos_inf.contains(z)) inf_value[z] = ExtReal::inf();
                else if (cls->neg_inf.contains(z)) inf_value[z] = ExtReal::neg_inf();
                skip[z] = inf_value[z].is_infinite();
            }
        }
    }
    const auto direction = problem.regime() == Regime::nonnegative ? BoundDirection::increasing
                                                                   : BoundDirection::decreasing;
    StoppingSolution out;
    auto step = [&](const std::vector<ExtReal>& v) { return t_o_apply(problem, v); };
    out.V = detail::iterate_to_limit(std::vector<ExtReal>(n, 0.0), step, skip, alpha, direction, options,
                                     out.certificate, "stopping value iteration");
    for (std::size_t z = 0; z < n; ++z)
        if (skip[z]) out.V[z] = inf_value[z];

    const std::size_t m = problem.num_graph_pairs();
    out.f = QVector(m, ExtReal::inf());
    out.continuation_pairs = PairSet::none(m);
    for (std::size_t z = 0; z < m; ++z) {
        if (!problem.can_continue(z)) continue;
        out.continuation_pairs.insert(z);
        out.f[z] = continuation_value(problem, z, out.V);
    }
    if (problem.regime() != Regime::nonpositive) {
        std::vector<bool> stop(n, true);
        for (std::size_t z = 0; z < n; ++z)
            if (problem.can_continue(z)) stop[z] = !(continuation_value(problem, z, out.V) < problem.stop_cost(z));
        out.stop_policy = std::move(stop);
    }
    return out;
}

QVector reconstruct_q(const StoppingProblem& problem, const std::vector<ExtReal>& V) {
    if (V.size() != problem.num_states()) throw ModelError("stopping value vector has the wrong length");
    const auto& model = problem.base();
    QVector Q(model.num_pairs());
    for (std::size_t z = 0; z < model.num_pairs(); ++z) {
        ExtReal s = 0.0;
        for (const auto& t : problem.continue_row(z)) s += ExtReal(t.prob) * V[t.target];
        const auto [x, u] = model.pair_at(z);
        Q[z] = model.control(x, u).cost + ExtReal(model.discount()) * s;
    }
    return Q;
}

LpBound lp_upper_bound(const TotalCostModel& model, const Theta& theta, const ValueVector& J,
                       const LpBoundOptions& options) {
    if (model.regime() != Regime::nonnegative) throw ConfigError("the stopping linear program requires regime P");
    model.require_atomic_only("the stopping linear program");
    if (J.size() != model.num_states()) throw ModelError("value vector does not match the model's states");
    if (theta.B.universe() != model.num_states()) throw ModelError("state subset has the wrong universe size");
    if (!theta.policy.is_deterministic()) throw ConfigError("the stopping linear program needs a deterministic policy");
    const auto mu = theta.policy.controls();
    const std::size_t n = model.num_states();
    const auto members = theta.B.elements();
    for (auto x : members)
        if (!J[x].is_finite())
            throw ModelError("the stopping linear program needs J finite on B; J(" + std::to_string(x) + ") = " +
                             to_string(J[x]));

    LpBound out;
    out.rho.assign(n, 0.0);
    if (options.rho) {
        if (options.rho->size() != n) throw ConfigError("LP weights must have one entry per state");
        for (auto x : members)
            if (!((*options.rho)[x] > 0.0)) throw ConfigError("LP weights must be strictly positive on B");
        for (auto x : members) out.rho[x] = (*options.rho)[x];
    } else {
        for (auto x : members) out.rho[x] = 1.0 / static_cast<double>(members.size()) / (J[x].value() + 1.0);
    }
    double objective = 0.0;
    for (auto x : members) objective += out.rho[x] * J[x].value();
    if (!std::isfinite(objective)) throw ModelError("sum of rho J over B is not finite");
    out.certificate.weighted_objective_bound = objective;

    const double alpha = model.discount();
    auto rhs = [&](std::size_t x, std::size_t u, const ValueVector& W) {
        const auto& c = model.control(x, u);
        ExtReal s = 0.0;
        for (const auto& t : c.transitions) s += ExtReal(t.prob) * (theta.B.contains(t.target) ? W[t.target] : J[t.target]);
        return c.cost + ExtReal(alpha) * s;
    };

    ValueVector W = J;
    double r = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    for (; k < options.max_iterations; ++k) {
        ValueVector next = W;
        for (auto x : members) next[x] = min(J[x], rhs(x, mu[x], W));
        r = sup_distance(next, W);
        const bool same = next == W;
        W = std::move(next);
        if (same || r < options.tolerance) {
            ++k;
            break;
        }
    }
    if (!(r < options.tolerance))
        throw ConvergenceError("stopping linear program iteration reached the cap", W.values(),
                               BoundDirection::decreasing, r);
    out.certificate.iterations = k;
    out.certificate.residual = r;
    out.W = W;

    out.Qbar = QVector(model.num_pairs());
    for (std::size_t i = 0; i < model.num_pairs(); ++i) {
        const auto [x, u] = model.pair_at(i);
        out.Qbar[i] = rhs(x, u, W);
    }

    const QVector F = f_theta_apply(model, theta, out.Qbar, J);
    out.certificate.upper_violation = leq_violation(out.Qbar, F);
    const StoppingProblem problem(model, theta, J);
    FixedPointOptions fp;
    fp.tolerance = 1e-13;
    const auto sol = solve_stopping(problem, fp);
    const QVector Qtheta = reconstruct_q(problem, sol.V);
    out.certificate.lower_violation = leq_violation(Qtheta, out.Qbar);
    return out;
}

} // namespace mvpi
