#include "mvpi/operators.hpp"

namespace mvpi {

AffineInfimum affine_infimum(ExtReal a, ExtReal b, const Interval& iv) {
    if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
        throw ModelError("affine_infimum: intercept and slope are infinities of opposite sign");

    if (b.is_pos_inf()) {
        // every t > 0 gives +inf; t = 0 gives a
        if (iv.lo == 0.0 && iv.lo_closed) return {a, true, 0.0};
        return {ExtReal::inf(), false, std::nullopt};
    }
    if (b.is_neg_inf()) {
        if (a.is_pos_inf()) return {ExtReal::inf(), true, iv.midpoint()};
        return {ExtReal::neg_inf(), true, iv.midpoint()};
    }
    if (a.is_infinite()) return {a, true, iv.midpoint()};

    if (b.value() >= 0.0) {
        return {a + b * iv.lo, iv.lo_closed || b.value() == 0.0, iv.lo};
    }
    return {a + b * iv.hi, iv.hi_closed, iv.hi};
}

ExtReal expectation(const std::vector<Transition>& row, const ValueVector& J) {
    ExtReal s = 0.0;
    for (const auto& t : row) s += ExtReal(t.prob) * J[t.target];
    return s;
}

ExtReal control_value(const TotalCostModel& model, std::size_t x, std::size_t u, const ValueVector& J) {
    const auto& c = model.control(x, u);
    return c.cost + ExtReal(model.discount()) * expectation(c.transitions, J);
}

ExtReal family_value_at(const TotalCostModel& model, std::size_t x, std::size_t f, double t, const ValueVector& J) {
    const auto& fam = model.state(x).families.at(f);
    ExtReal s = 0.0;
    for (const auto& tr : fam.transitions) s += ExtReal(tr.p0 + tr.p1 * t) * J[tr.target];
    return ExtReal(fam.cost_at(t)) + ExtReal(model.discount()) * s;
}

ExtReal family_infimum(const TotalCostModel& model, std::size_t x, std::size_t f, const ValueVector& J) {
    const auto& fam = model.state(x).families.at(f);
    const auto& iv = fam.interval;
    const double alpha = model.discount();
    const double mid = iv.midpoint();

    // Interior (lo, hi): an affine probability that is nonnegative on the closure
    // is either identically zero there or strictly positive on the open interval.
    bool hits_pos_inf = false;
    bool hits_neg_inf = false;
    double a = fam.c0;
    double b = fam.c1;
    for (const auto& tr : fam.transitions) {
        const ExtReal v = J[tr.target];
        if (v.is_finite()) {
            a += alpha * tr.p0 * v.value();
            b += alpha * tr.p1 * v.value();
        } else if (alpha > 0.0 && tr.p0 + tr.p1 * mid > 0.0) {
            (v.is_pos_inf() ? hits_pos_inf : hits_neg_inf) = true;
        }
    }
    ExtReal best;
    if (hits_pos_inf) {
        best = ExtReal::inf();
    } else if (hits_neg_inf) {
        best = ExtReal::neg_inf();
    } else {
        Interval open{iv.lo, iv.hi, false, false};
        best = affine_infimum(a, b, open).value;
    }
    if (iv.lo_closed) best = min(best, family_value_at(model, x, f, iv.lo, J));
    if (iv.hi_closed) best = min(best, family_value_at(model, x, f, iv.hi, J));
    return best;
}

namespace {

void require_size(const TotalCostModel& model, const ValueVector& J) {
    if (J.size() != model.num_states())
        throw ModelError("value vector has " + std::to_string(J.size()) + " entries, model has " +
                         std::to_string(model.num_states()) + " states");
}

void require_size(const TotalCostModel& model, const QVector& Q) {
    if (Q.size() != model.num_pairs())
        throw ModelError("Q vector has " + std::to_string(Q.size()) + " entries, model has " +
                         std::to_string(model.num_pairs()) + " state-control pairs");
}

} // namespace

ValueVector bellman_T(const TotalCostModel& model, const ValueVector& J) {
    require_size(model, J);
    ValueVector out(model.num_states(), ExtReal::inf());
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        ExtReal best = ExtReal::inf();
        for (std::size_t u = 0; u < model.num_controls(x); ++u) best = min(best, control_value(model, x, u, J));
        for (std::size_t f = 0; f < model.state(x).families.size(); ++f)
            best = min(best, family_infimum(model, x, f, J));
        out[x] = best;
    }
    return out;
}

ValueVector bellman_T_power(const TotalCostModel& model, const ValueVector& J, std::size_t n) {
    ValueVector out = J;
    for (std::size_t i = 0; i < n; ++i) out = bellman_T(model, out);
    return out;
}

ValueVector bellman_T_mu(const TotalCostModel& model, const Policy& policy, const ValueVector& J) {
    require_size(model, J);
    require_valid_policy(model, policy);
    ValueVector out(model.num_states());
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        const auto& act = policy.action(x);
        if (const auto* fc = std::get_if<FamilyChoice>(&act)) {
            out[x] = family_value_at(model, x, fc->family, fc->parameter, J);
            continue;
        }
        const auto& dist = std::get<std::vector<double>>(act);
        ExtReal s = 0.0;
        for (std::size_t u = 0; u < dist.size(); ++u)
            if (dist[u] > 0.0) s += ExtReal(dist[u]) * control_value(model, x, u, J);
        out[x] = s;
    }
    return out;
}

QVector h_backup(const TotalCostModel& model, const ValueVector& J) {
    require_size(model, J);
    QVector Q(model.num_pairs());
    for (std::size_t i = 0; i < model.num_pairs(); ++i) {
        const auto [x, u] = model.pair_at(i);
        Q[i] = control_value(model, x, u, J);
    }
    return Q;
}

ValueVector m_minimize(const TotalCostModel& model, const QVector& Q) {
    model.require_atomic_only("m_minimize");
    require_size(model, Q);
    ValueVector J(model.num_states(), ExtReal::inf());
    for (std::size_t x = 0; x < model.num_states(); ++x)
        for (std::size_t u = 0; u < model.num_controls(x); ++u) J[x] = min(J[x], Q[model.pair_index(x, u)]);
    return J;
}

std::vector<std::size_t> greedy_controls(const TotalCostModel& model, const QVector& Q, double epsilon) {
    if (!(epsilon >= 0.0)) throw ConfigError("greedy selection slack must be nonnegative");
    const ValueVector m = m_minimize(model, Q);
    std::vector<std::size_t> mu(model.num_states(), 0);
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        const ExtReal cap = m[x] + epsilon;
        for (std::size_t u = 0; u < model.num_controls(x); ++u) {
            if (Q[model.pair_index(x, u)] <= cap) {
                mu[x] = u;
                break;
            }
        }
    }
    return mu;
}

Policy greedy_select(const TotalCostModel& model, const QVector& Q, double epsilon) {
    return Policy::deterministic(model, greedy_controls(model, Q, epsilon));
}

} // namespace mvpi
