#include "mvpi/evaluation.hpp"

#include <Eigen/Dense>

#include "mvpi/chain.hpp"
#include "mvpi/operators.hpp"

namespace mvpi {

std::string PolicyEvaluation::describe() const {
    if (exact) return "exact";
    return "iterative with residual " + to_string(ExtReal(residual));
}

namespace {

PolicyEvaluation evaluate_exact(const TotalCostModel& model, const InducedChain& chain,
                                const LimitClassification& inf) {
    const std::size_t n = model.num_states();
    const double alpha = model.discount();
    ValueVector J(n, 0.0);

    // zero-cost closed classes are pinned at 0 when alpha = 1
    std::vector<bool> pinned(n, false);
    if (alpha >= 1.0) {
        const auto adj = support_graph(chain);
        const auto comps = strongly_connected_components(adj);
        std::vector<std::size_t> comp_of(n);
        for (std::size_t c = 0; c < comps.size(); ++c)
            for (auto x : comps[c]) comp_of[x] = c;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            bool closed = true;
            for (auto x : comps[c])
                for (auto y : adj[x]) closed = closed && comp_of[y] == c;
            if (!closed) continue;
            for (auto x : comps[c])
                if (!inf.pos_inf.contains(x) && !inf.neg_inf.contains(x)) pinned[x] = true;
        }
    }

    std::vector<std::size_t> solve_idx;
    std::vector<Eigen::Index> pos(n, -1);
    for (std::size_t x = 0; x < n; ++x) {
        if (inf.pos_inf.contains(x)) J[x] = ExtReal::inf();
        else if (inf.neg_inf.contains(x)) J[x] = ExtReal::neg_inf();
        else if (!pinned[x]) {
            pos[x] = static_cast<Eigen::Index>(solve_idx.size());
            solve_idx.push_back(x);
        }
    }
    const auto m = static_cast<Eigen::Index>(solve_idx.size());
    if (m > 0) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd b(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto x = solve_idx[static_cast<std::size_t>(i)];
            b(i) = chain.cost[x].value();
            double leave = 0.0;
            for (const auto& t : chain.rows[x]) {
                if (t.target != x) leave += t.prob;
                if (pos[t.target] >= 0) A(i, pos[t.target]) -= alpha * t.prob;
            }
            // alpha = 1: diagonal 1 - p(x|x) taken as the mass leaving x
            if (alpha >= 1.0) A(i, i) = leave;
        }
        const Eigen::VectorXd v = A.partialPivLu().solve(b);
        for (Eigen::Index i = 0; i < m; ++i) J[solve_idx[static_cast<std::size_t>(i)]] = v(i);
    }
    PolicyEvaluation out;
    out.value = std::move(J);
    out.exact = true;
    return out;
}

} // namespace

PolicyEvaluation evaluate_policy(const TotalCostModel& model, const Policy& policy, const EvaluationOptions& options) {
    const auto chain = induced_chain(model, policy);
    const auto inf = policy_infinite_states(model, chain);
    if (options.method == EvaluationMethod::exact) return evaluate_exact(model, chain, inf);

    const std::size_t n = model.num_states();
    std::vector<bool> skip(n, false);
    for (std::size_t x = 0; x < n; ++x) skip[x] = inf.pos_inf.contains(x) || inf.neg_inf.contains(x);

    PolicyEvaluation out;
    out.exact = false;
    ValueVector J(n, 0.0);
    if (options.record_iterates) out.iterates.push_back(J);
    double r = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    while (k < options.max_iterations) {
        ValueVector next = bellman_T_mu(model, policy, J);
        r = sup_distance_excluding(next, J, skip);
        J = std::move(next);
        ++k;
        if (options.record_iterates) out.iterates.push_back(J);
        if (r < options.tolerance) break;
    }
    if (!(r < options.tolerance)) {
        const auto dir = model.regime() == Regime::nonnegative   ? BoundDirection::increasing
                         : model.regime() == Regime::nonpositive ? BoundDirection::decreasing
                                                                 : BoundDirection::none;
        throw ConvergenceError("policy evaluation reached the iteration cap", J.values(), dir, r);
    }
    for (std::size_t x = 0; x < n; ++x) {
        if (inf.pos_inf.contains(x)) J[x] = ExtReal::inf();
        else if (inf.neg_inf.contains(x)) J[x] = ExtReal::neg_inf();
    }
    out.value = std::move(J);
    out.residual = r;
    out.iterations = k;
    return out;
}

} // namespace mvpi
