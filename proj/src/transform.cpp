#include "mvpi/transform.hpp"

namespace mvpi {

TotalCostModel convert_transition_discount(const TransitionDiscountModel& base, Regime sign) {
    if (sign == Regime::discounted) throw ConfigError("transition-discount transform targets regime N or P");
    const std::size_t n = base.controls.size();
    const std::size_t sink = n;
    std::vector<StateSpec> states(n + 1);
    for (std::size_t x = 0; x < n; ++x) {
        states[x].name = x < base.state_names.size() ? base.state_names[x] : std::to_string(x);
        for (const auto& dc : base.controls[x]) {
            AtomicControl c;
            c.id = dc.id;
            double cost = 0.0;
            double kept = 0.0;
            for (const auto& t : dc.transitions) {
                if (!(t.factor >= 0.0 && t.factor <= 1.0))
                    throw ModelError("state " + std::to_string(x) + ": discount factor outside [0, 1]");
                if (t.target >= n) throw ModelError("state " + std::to_string(x) + ": successor out of range");
                if ((sign == Regime::nonnegative && t.cost < 0.0) || (sign == Regime::nonpositive && t.cost > 0.0))
                    throw ModelError("state " + std::to_string(x) + ": transition cost has the wrong sign");
                cost += t.cost * t.prob;
                const double p = t.factor * t.prob;
                kept += p;
                if (p > 0.0) c.transitions.push_back({t.target, p});
            }
            if (kept > 1.0 + kProbabilityTolerance)
                throw ModelError("state " + std::to_string(x) + ": discounted row exceeds 1");
            const double rest = 1.0 - kept;
            if (rest > 0.0) c.transitions.push_back({sink, rest});
            c.cost = cost;
            states[x].controls.push_back(std::move(c));
        }
    }
    states[sink].name = "inf";
    states[sink].controls.push_back({"stay", 0.0, {{sink, 1.0}}});
    return TotalCostModel(std::move(states), 1.0, sign);
}

} // namespace mvpi
