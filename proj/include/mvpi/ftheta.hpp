#pragma once

#include <optional>
#include <string>
#include <utility>

#include "mvpi/model.hpp"

namespace mvpi {

/// theta = (mu, B). Any policy and subset is admissible on a finite space.
struct Theta {
    Policy policy;
    StateSet B;
};

/// theta-hat = (mu, R) with R a set of atomic pairs; B is the projection of R onto S.
struct ThetaHat {
    Policy policy;
    PairSet R;

    StateSet projected_B(const TotalCostModel& model) const;
};

/**
 * F_theta(Q; J)(x,u) = g(x,u) + alpha * sum_x' q(x'|x,u) * w(x'), where
 * w(x') = J(x') off B and w(x') = sum_u' mu(u'|x') min{J(x'), Q(x',u')} on B.
 */
QVector f_theta_apply(const TotalCostModel& model, const Theta& theta, const QVector& Q, const ValueVector& J);

/// Variant where only the pairs of R take the min; the remaining mass of mu at x' keeps J(x').
QVector f_theta_hat_apply(const TotalCostModel& model, const ThetaHat& theta, const QVector& Q, const ValueVector& J);

/// n-fold composition of F_theta(.; J) starting from Q0.
QVector f_theta_power(const TotalCostModel& model, const Theta& theta, const QVector& Q0, const ValueVector& J,
                      std::size_t n);

struct FixedPointOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 100000;
};

struct FixedPointCertificate {
    std::size_t iterations = 0;
    double residual = 0.0;
    BoundDirection direction = BoundDirection::none;
    /// A-posteriori sup-norm bound alpha r / (1 - alpha); only for contractions.
    std::optional<double> error_bound;
    /// Two consecutive iterates were identical.
    bool stabilized = false;

    std::string describe() const;
};

struct FixedPointResult {
    QVector Q;
    FixedPointCertificate certificate;
};

/**
 * Q_{theta,J} as the limit of F_theta^k(0; J).
 *
 * Discounted models stop on the contraction bound (or when the residual
 * reaches rounding level). Otherwise the iteration is monotone, decreasing
 * for N and increasing for P; pairs whose limit is infinite are found by
 * graph analysis of the associated stopping problem and excluded from the
 * residual. On the cap a ConvergenceError carries the last iterate, which is
 * an upper bound (N) or a lower bound (P) on the limit.
 */
FixedPointResult q_fixed_point(const TotalCostModel& model, const Theta& theta, const ValueVector& J,
                               const FixedPointOptions& options = {});

/// F_theta^n(Q;J) on gamma_mask (old Q elsewhere), then M of the new Q on s_mask (old J elsewhere).
std::pair<QVector, ValueVector> masked_update(const TotalCostModel& model, const Theta& theta, const QVector& Q,
                                              const ValueVector& J, const PairSet& gamma_mask,
                                              const StateSet& s_mask, std::size_t n);

} // namespace mvpi
