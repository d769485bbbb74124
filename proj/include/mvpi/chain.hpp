#pragma once

#include <optional>
#include <vector>

#include "mvpi/model.hpp"

namespace mvpi {

/// Markov chain induced on S by a stationary policy: expected one-stage cost and merged transition rows.
struct InducedChain {
    std::vector<ExtReal> cost;
    std::vector<std::vector<Transition>> rows;
};

InducedChain induced_chain(const TotalCostModel& model, const Policy& policy);

/// Strongly connected components of a directed graph given by adjacency lists.
/// Components are returned in reverse topological order (sinks first).
std::vector<std::vector<std::size_t>> strongly_connected_components(const std::vector<std::vector<std::size_t>>& adj);

/// States from which some state in `targets` is reachable (targets included).
std::vector<bool> can_reach(const std::vector<std::vector<std::size_t>>& adj, const std::vector<bool>& targets);

/// Support graph of the induced chain (edges with positive probability).
std::vector<std::vector<std::size_t>> support_graph(const InducedChain& chain);

/// Distribution of x_n for the chain started from `initial`.
std::vector<double> state_marginal(const TotalCostModel& model, const Policy& policy,
                                   const std::vector<double>& initial, std::size_t n);

/// Expectation of J(x_n) under the chain, with 0 * inf = 0.
ExtReal expected_value_at_stage(const TotalCostModel& model, const Policy& policy,
                                const std::vector<double>& initial, std::size_t n, const ValueVector& J);

/// p = (1 - beta) sum_n beta^n rho^T kappa^n, computed by a direct linear solve.
std::vector<double> occupation_measure(const TotalCostModel& model, const Policy& policy,
                                       const std::vector<double>& rho, double beta);

/// Largest subset of B that the induced chain never leaves.
StateSet absorbing_core(const TotalCostModel& model, const Policy& policy, const StateSet& B);

/// States whose value iteration limit is infinite.
struct LimitClassification {
    StateSet pos_inf;
    StateSet neg_inf;
};

/**
 * Classifies the states whose optimal total cost is infinite when alpha = 1.
 *
 * Regime P: a state has finite cost iff it can reach, with probability one
 * and through finite-cost controls, the largest set that can be held forever
 * at zero cost. Regime N: a state has cost -inf iff some control sequence
 * reaches, with positive probability, an end component containing a
 * negative-cost control (or a control of cost -inf).
 *
 * Affine families are replaced by their two endpoint controls, which gives
 * the limit of value iteration started from zero. Returns nullopt when that
 * replacement is not sound (families together with infinite atomic costs),
 * and an empty classification for discounted models.
 */
std::optional<LimitClassification> limit_infinite_states(const TotalCostModel& model);

/// Same classification for a single stationary policy (no optimization).
LimitClassification policy_infinite_states(const TotalCostModel& model, const InducedChain& chain);

} // namespace mvpi
