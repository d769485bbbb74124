#pragma once

#include <optional>
#include <vector>

#include "mvpi/ftheta.hpp"
#include "mvpi/model.hpp"

namespace mvpi {

enum class PairStateKind {
    stop_only,      ///< (x,u) with x outside B
    stop_continue,  ///< (x,u) in Gamma with x in B
    outside_graph,  ///< (x,u) with x in B but u not a control of x; never reached
    absorbing       ///< the cost-free terminal state
};

struct PairState {
    std::size_t x = 0;
    std::size_t u = 0;
    PairStateKind kind = PairStateKind::stop_only;
};

/**
 * Two-action (stop / continue) problem whose states are the pairs (x,u).
 *
 * Stopping at (x,u) costs J(x) and moves to the terminal state. Continuing
 * from a pair of Gamma with x in B costs g(x,u) and moves to (x',u') with
 * probability q(x'|x,u) mu(u'|x'). The pair states of Gamma come first in
 * the model's pair order, then the pairs outside Gamma, then the terminal
 * state. Control labels run over 0..max_controls-1.
 */
class StoppingProblem {
public:
    StoppingProblem(const TotalCostModel& model, const Theta& theta, const ValueVector& J);

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t terminal_state() const noexcept { return states_.size() - 1; }
    std::size_t num_graph_pairs() const noexcept { return base_.num_pairs(); }
    const PairState& pair_state(std::size_t z) const { return states_.at(z); }

    ExtReal stop_cost(std::size_t z) const;
    bool can_continue(std::size_t z) const { return states_.at(z).kind == PairStateKind::stop_continue ||
                                                    states_.at(z).kind == PairStateKind::outside_graph; }
    ExtReal continue_cost(std::size_t z) const;
    /// Continuation kernel q°(.|z, continue); defined for every pair of Gamma and for the outside pairs.
    const std::vector<Transition>& continue_row(std::size_t z) const { return rows_.at(z); }

    double discount() const noexcept { return base_.discount(); }
    Regime regime() const noexcept { return base_.regime(); }
    /// Continuation cost of the outside pairs (0 for N, +inf for P, the D bound otherwise).
    ExtReal outside_cost() const noexcept { return K_; }

    const TotalCostModel& base() const noexcept { return base_; }
    const Theta& theta() const noexcept { return theta_; }
    const ValueVector& J() const noexcept { return J_; }

    /// The problem as an atomic TotalCostModel: control 0 = stop, control 1 = continue when available.
    TotalCostModel as_model() const;

private:
    TotalCostModel base_;
    Theta theta_;
    ValueVector J_;
    ExtReal K_;
    std::vector<PairState> states_;
    std::vector<std::vector<Transition>> rows_;
};

StoppingProblem build_stopping(const TotalCostModel& model, const Theta& theta, const ValueVector& J);

/// G_V(z) = continue cost + alpha * sum q°(z'|z) V(z').
ExtReal continuation_value(const StoppingProblem& problem, std::size_t z, const std::vector<ExtReal>& V);

/// T_o(V): min{J(x), G_V(z)} where continuing is allowed, J(x) on stop-only states, 0 at the terminal state.
std::vector<ExtReal> t_o_apply(const StoppingProblem& problem, const std::vector<ExtReal>& V);

struct StoppingSolution {
    std::vector<ExtReal> V;
    /// Continuation values G_{V*} on the pairs of Gamma with x in B (other entries unused).
    QVector f;
    PairSet continuation_pairs;
    /// true = stop; provided for D and P.
    std::optional<std::vector<bool>> stop_policy;
    FixedPointCertificate certificate;
};

/// V* as the limit of T_o^k(0), with the same stopping rules as q_fixed_point.
StoppingSolution solve_stopping(const StoppingProblem& problem, const FixedPointOptions& options = {});

/// Q(x,u) = g(x,u) + alpha * sum_z q°(z|(x,u)) V*(z) over all pairs of Gamma.
QVector reconstruct_q(const StoppingProblem& problem, const std::vector<ExtReal>& V);

struct LpBoundOptions {
    /// Weights on the states of B; defaults to 1/|B| / (J(x) + 1).
    std::optional<std::vector<double>> rho;
    double tolerance = 1e-13;
    std::size_t max_iterations = 1000000;
};

struct LpCertificate {
    std::size_t iterations = 0;
    double residual = 0.0;
    /// max (Qbar - F_theta(Qbar; J))^+ ; Qbar <= F_theta(Qbar; J) holds up to this.
    double upper_violation = 0.0;
    /// max (Q_{theta,J} - Qbar)^+ ; Qbar >= Q_{theta,J} holds up to this.
    double lower_violation = 0.0;
    /// sum over B of rho(x) J(x).
    double weighted_objective_bound = 0.0;

    bool holds(double tol) const noexcept { return upper_violation <= tol && lower_violation <= tol; }
};

struct LpBound {
    /// Maximal feasible W on B; entries off B hold J.
    ValueVector W;
    QVector Qbar;
    std::vector<double> rho;
    LpCertificate certificate;
};

/**
 * Maximal solution of the stopping linear program for a deterministic mu
 * (variables W(x) = V(x, mu(x)), x in B):
 *   W(x) <= J(x),  W(x) <= g(x,mu(x)) + sum_{x' not in B} q J + sum_{x' in B} q W,
 * found by downward iteration from W = J. The result does not depend on the
 * (strictly positive) weights; they only have to make sum rho J finite.
 * Regime P, atomic model, J finite on B.
 */
LpBound lp_upper_bound(const TotalCostModel& model, const Theta& theta, const ValueVector& J,
                       const LpBoundOptions& options = {});

} // namespace mvpi
