#include "mvpi/ftheta.hpp"

#include "iteration.hpp"
#include "mvpi/chain.hpp"
#include "mvpi/operators.hpp"
#include "mvpi/stopping.hpp"

namespace mvpi {

StateSet ThetaHat::projected_B(const TotalCostModel& model) const {
    StateSet B = StateSet::none(model.num_states());
    for (std::size_t i = 0; i < R.universe(); ++i)
        if (R.contains(i)) B.insert(model.pair_at(i).first);
    return B;
}

std::string FixedPointCertificate::describe() const {
    std::string s = std::string(to_string(direction)) + " iterations=" + std::to_string(iterations) +
                    " residual=" + to_string(ExtReal(residual));
    if (error_bound) s += " error_bound=" + to_string(ExtReal(*error_bound));
    if (stabilized) s += " stabilized";
    return s;
}

namespace {

void check_inputs(const TotalCostModel& model, const Policy& policy, const QVector& Q, const ValueVector& J) {
    model.require_atomic_only("F_theta");
    if (Q.size() != model.num_pairs()) throw ModelError("Q vector does not match the model's pairs");
    if (J.size() != model.num_states()) throw ModelError("value vector does not match the model's states");
    require_valid_policy(model, policy);
}

void check_subset(const TotalCostModel& model, const StateSet& B) {
    if (B.universe() != model.num_states()) throw ModelError("state subset has the wrong universe size");
}

// w(x') of the F_theta backup for every successor x'
std::vector<ExtReal> successor_weights(const TotalCostModel& model, const Theta& theta, const QVector& Q,
                                       const ValueVector& J) {
    std::vector<ExtReal> w(model.num_states());
    for (std::size_t y = 0; y < model.num_states(); ++y) {
        if (!theta.B.contains(y)) {
            w[y] = J[y];
            continue;
        }
        ExtReal s = 0.0;
        for (std::size_t v = 0; v < model.num_controls(y); ++v) {
            const double p = theta.policy.probability(y, v);
            if (p > 0.0) s += ExtReal(p) * min(J[y], Q[model.pair_index(y, v)]);
        }
        w[y] = s;
    }
    return w;
}

QVector backup_with_weights(const TotalCostModel& model, const std::vector<ExtReal>& w) {
    QVector out(model.num_pairs());
    const ExtReal alpha = model.discount();
    for (std::size_t i = 0; i < model.num_pairs(); ++i) {
        const auto [x, u] = model.pair_at(i);
        const auto& c = model.control(x, u);
        ExtReal s = 0.0;
        for (const auto& t : c.transitions) s += ExtReal(t.prob) * w[t.target];
        out[i] = c.cost + alpha * s;
    }
    return out;
}

} // namespace

QVector f_theta_apply(const TotalCostModel& model, const Theta& theta, const QVector& Q, const ValueVector& J) {
    check_inputs(model, theta.policy, Q, J);
    check_subset(model, theta.B);
    return backup_with_weights(model, successor_weights(model, theta, Q, J));
}

QVector f_theta_hat_apply(const TotalCostModel& model, const ThetaHat& theta, const QVector& Q, const ValueVector& J) {
    check_inputs(model, theta.policy, Q, J);
    if (theta.R.universe() != model.num_pairs()) throw ModelError("pair subset has the wrong universe size");
    const StateSet B = theta.projected_B(model);
    std::vector<ExtReal> w(model.num_states());
    for (std::size_t y = 0; y < model.num_states(); ++y) {
        if (!B.contains(y)) {
            w[y] = J[y];
            continue;
        }
        double outside_mass = 0.0;
        ExtReal s = 0.0;
        for (std::size_t v = 0; v < model.num_controls(y); ++v) {
            const double p = theta.policy.probability(y, v);
            if (p <= 0.0) continue;
            const std::size_t i = model.pair_index(y, v);
            if (theta.R.contains(i)) s += ExtReal(p) * min(J[y], Q[i]);
            else outside_mass += p;
        }
        w[y] = ExtReal(outside_mass) * J[y] + s;
    }
    return backup_with_weights(model, w);
}

QVector f_theta_power(const TotalCostModel& model, const Theta& theta, const QVector& Q0, const ValueVector& J,
                      std::size_t n) {
    if (n == 0) throw ConfigError("F_theta power needs n >= 1");
    QVector Q = Q0;
    for (std::size_t i = 0; i < n; ++i) Q = f_theta_apply(model, theta, Q, J);
    return Q;
}

FixedPointResult q_fixed_point(const TotalCostModel& model, const Theta& theta, const ValueVector& J,
                               const FixedPointOptions& options) {
    check_inputs(model, theta.policy, QVector(model.num_pairs()), J);
    check_subset(model, theta.B);
    const std::size_t m = model.num_pairs();
    const double alpha = model.discount();

    // pairs whose limit is infinite, from the stopping problem's value classification
    std::vector<bool> skip(m, false);
    std::vector<ExtReal> inf_value(m, 0.0);
    if (alpha >= 1.0) {
        const StoppingProblem problem(model, theta, J);
        const auto cls = limit_infinite_states(problem.as_model());
        if (cls) {
            std::vector<ExtReal> Vpattern(problem.num_states(), 0.0);
            for (std::size_t z = 0; z < problem.num_states(); ++z) {
                if (cls->pos_inf.contains(z)) Vpattern[z] = ExtReal::inf();
                else if (cls->neg_inf.contains(z)) Vpattern[z] = ExtReal::neg_inf();
            }
            const QVector pattern = reconstruct_q(problem, Vpattern);
            for (std::size_t i = 0; i < m; ++i) {
                if (pattern[i].is_infinite()) {
                    skip[i] = true;
                    inf_value[i] = pattern[i];
                }
            }
        }
    }

    const auto direction = model.regime() == Regime::nonnegative ? BoundDirection::increasing
                                                                 : BoundDirection::decreasing;
    FixedPointResult out;
    auto step = [&](const std::vector<ExtReal>& v) {
        return f_theta_apply(model, theta, QVector(v), J).values();
    };
    auto v = detail::iterate_to_limit(std::vector<ExtReal>(m, 0.0), step, skip, alpha, direction, options,
                                      out.certificate, "Q fixed-point iteration");
    for (std::size_t i = 0; i < m; ++i)
        if (skip[i]) v[i] = inf_value[i];
    out.Q = QVector(std::move(v));
    return out;
}

std::pair<QVector, ValueVector> masked_update(const TotalCostModel& model, const Theta& theta, const QVector& Q,
                                              const ValueVector& J, const PairSet& gamma_mask,
                                              const StateSet& s_mask, std::size_t n) {
    if (gamma_mask.universe() != model.num_pairs()) throw ModelError("pair mask has the wrong universe size");
    check_subset(model, s_mask);
    const QVector full = f_theta_power(model, theta, Q, J, n);
    QVector newQ = Q;
    for (std::size_t i = 0; i < newQ.size(); ++i)
        if (gamma_mask.contains(i)) newQ[i] = full[i];
    const ValueVector M = m_minimize(model, newQ);
    ValueVector newJ = J;
    for (std::size_t x = 0; x < newJ.size(); ++x)
        if (s_mask.contains(x)) newJ[x] = M[x];
    return {std::move(newQ), std::move(newJ)};
}

} // namespace mvpi
