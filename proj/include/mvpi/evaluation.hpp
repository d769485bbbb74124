#pragma once

#include <string>
#include <vector>

#include "mvpi/model.hpp"

namespace mvpi {

enum class EvaluationMethod { exact, iterative };

struct EvaluationOptions {
    EvaluationMethod method = EvaluationMethod::exact;
    std::size_t max_iterations = 100000;
    double tolerance = 1e-12;
    /// Keep T_mu^k(0) for k = 0, 1, ... (iterative method only).
    bool record_iterates = false;
};

struct PolicyEvaluation {
    ValueVector value;
    bool exact = true;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::vector<ValueVector> iterates;

    /// "exact" or "iterative with residual r".
    std::string describe() const;
};

/**
 * Total cost J_mu of a stationary policy.
 *
 * Exact method: states that reach an infinite-cost state, or (alpha = 1) a
 * closed class with nonzero cost, get the signed infinity; zero-cost closed
 * classes get 0; the rest is a linear solve of J = c + alpha P J.
 * Iterative method: T_mu^k(0) on the finite states with the same
 * classification for the infinite ones. Hitting the cap throws
 * ConvergenceError whose iterate is a lower bound (P) or upper bound (N).
 */
PolicyEvaluation evaluate_policy(const TotalCostModel& model, const Policy& policy,
                                 const EvaluationOptions& options = {});

} // namespace mvpi
