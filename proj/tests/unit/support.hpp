#pragma once

#include <vector>

#include "mvpi/model.hpp"
#include "mvpi/models.hpp"

namespace testing {

inline std::vector<mvpi::StateSpec> copy_states(const mvpi::TotalCostModel& m) {
    return {m.states().begin(), m.states().end()};
}

inline mvpi::TotalCostModel rebuild(const mvpi::TotalCostModel& m, std::vector<mvpi::StateSpec> states) {
    return mvpi::TotalCostModel(std::move(states), m.discount(), m.regime(), m.cost_bound());
}

inline mvpi::ValueVector random_values(mvpi::SeededUniform& rng, std::size_t n, double lo, double hi) {
    mvpi::ValueVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

inline mvpi::QVector random_q(mvpi::SeededUniform& rng, std::size_t n, double lo, double hi) {
    mvpi::QVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

inline mvpi::StateSet random_set(mvpi::SeededUniform& rng, std::size_t n) {
    std::vector<bool> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = rng.next() < 0.5;
    return mvpi::StateSet(std::move(m));
}

inline mvpi::Policy random_deterministic(mvpi::SeededUniform& rng, const mvpi::TotalCostModel& m) {
    std::vector<std::size_t> u(m.num_states());
    for (std::size_t x = 0; x < u.size(); ++x) u[x] = rng.index(m.num_controls(x));
    return mvpi::Policy::deterministic(m, u);
}

// Long-double value iteration on the raw data; the random models and FX-D all contract.
inline mvpi::ValueVector reference_optimum(const mvpi::TotalCostModel& m) {
    const std::size_t n = m.num_states();
    std::vector<long double> J(n, 0.0L), next(n);
    for (int it = 0; it < 1000000; ++it) {
        long double change = 0.0L;
        for (std::size_t x = 0; x < n; ++x) {
            long double best = 0.0L;
            for (std::size_t u = 0; u < m.num_controls(x); ++u) {
                const auto& c = m.control(x, u);
                long double v = c.cost.value();
                for (const auto& t : c.transitions) v += m.discount() * static_cast<long double>(t.prob) * J[t.target];
                if (u == 0 || v < best) best = v;
            }
            next[x] = best;
            change = std::max(change, best > J[x] ? best - J[x] : J[x] - best);
        }
        J.swap(next);
        if (change < 1e-17L) break;
    }
    mvpi::ValueVector out(n);
    for (std::size_t x = 0; x < n; ++x) out[x] = static_cast<double>(J[x]);
    return out;
}

} // namespace testing
