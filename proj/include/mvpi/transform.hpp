#pragma once

#include "mvpi/model.hpp"

namespace mvpi {

/// Transition with its own cost and discount factor.
struct DiscountedTransition {
    std::size_t target = 0;
    double prob = 0.0;
    double cost = 0.0;
    double factor = 1.0;
};

struct DiscountedControl {
    std::string id;
    std::vector<DiscountedTransition> transitions;
};

/// Model whose transitions x -> x' carry a cost g(x,u,x') and a discount factor beta(x,u,x').
struct TransitionDiscountModel {
    std::vector<std::string> state_names;
    std::vector<std::vector<DiscountedControl>> controls;
};

/**
 * Equivalent undiscounted model: one extra absorbing, cost-free state
 * (the last index) receives the mass 1 - sum beta q, the remaining
 * mass goes to x' with probability beta q, and the one-stage cost is the
 * expected transition cost.
 */
TotalCostModel convert_transition_discount(const TransitionDiscountModel& base, Regime sign);

} // namespace mvpi
