#pragma once

#include <optional>

#include "mvpi/model.hpp"

namespace mvpi {

/// Result of minimizing t -> a + b*t over an interval.
struct AffineInfimum {
    ExtReal value;
    bool attained = false;
    /// Minimizer when attained, otherwise the limit point; empty when no single point is meaningful.
    std::optional<double> point;
};

/// inf over the interval of t -> a + b*t under extended-real conventions.
/// Throws ModelError when a and b are infinities of opposite sign.
AffineInfimum affine_infimum(ExtReal a, ExtReal b, const Interval& interval);

/// sum_x' p(x') J(x') with 0 * inf = 0 and +inf absorbing.
ExtReal expectation(const std::vector<Transition>& row, const ValueVector& J);

/// g(x,u) + alpha * sum_x' q(x'|x,u) J(x') for atomic control u at x.
ExtReal control_value(const TotalCostModel& model, std::size_t x, std::size_t u, const ValueVector& J);

/// Pointwise value of family f at parameter t.
ExtReal family_value_at(const TotalCostModel& model, std::size_t x, std::size_t f, double t, const ValueVector& J);

/// Infimum of the family over its interval, with infinite successor values handled pointwise.
ExtReal family_infimum(const TotalCostModel& model, std::size_t x, std::size_t f, const ValueVector& J);

/// Optimal cost operator T.
ValueVector bellman_T(const TotalCostModel& model, const ValueVector& J);

/// T^n(J); n = 0 returns J.
ValueVector bellman_T_power(const TotalCostModel& model, const ValueVector& J, std::size_t n);

/// Policy operator T_mu.
ValueVector bellman_T_mu(const TotalCostModel& model, const Policy& policy, const ValueVector& J);

/// Q(x,u) = g(x,u) + alpha * sum q J over the atomic pairs.
QVector h_backup(const TotalCostModel& model, const ValueVector& J);

/// M(Q)(x) = min_u Q(x,u). Atomic-only models.
ValueVector m_minimize(const TotalCostModel& model, const QVector& Q);

/**
 * Deterministic policy with Q(x, mu(x)) <= M(Q)(x) + epsilon; the lowest
 * qualifying control index wins. Atomic-only models.
 */
Policy greedy_select(const TotalCostModel& model, const QVector& Q, double epsilon = 0.0);

/// Per-state control indices of greedy_select.
std::vector<std::size_t> greedy_controls(const TotalCostModel& model, const QVector& Q, double epsilon = 0.0);

} // namespace mvpi
