#include "mvpi/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvpi {

char regime_letter(Regime r) noexcept {
    switch (r) {
    case Regime::discounted: return 'D';
    case Regime::nonpositive: return 'N';
    case Regime::nonnegative: return 'P';
    }
    return '?';
}

Regime parse_regime(const std::string& text) {
    if (text == "D" || text == "d" || text == "discounted") return Regime::discounted;
    if (text == "N" || text == "n" || text == "nonpositive" || text == "negative") return Regime::nonpositive;
    if (text == "P" || text == "p" || text == "nonnegative" || text == "positive") return Regime::nonnegative;
    throw ModelError("unknown regime '" + text + "' (expected D, N or P)");
}

TotalCostModel::TotalCostModel(std::vector<StateSpec> states, double discount, Regime regime,
                               std::optional<double> cost_bound)
    : states_(std::move(states)), discount_(discount), regime_(regime), cost_bound_(cost_bound) {
    const std::size_t n = states_.size();
    pair_offset_.reserve(n + 1);
    pair_offset_.push_back(0);
    for (std::size_t x = 0; x < n; ++x) {
        const auto& s = states_[x];
        for (std::size_t u = 0; u < s.controls.size(); ++u) {
            for (const auto& t : s.controls[u].transitions)
                if (t.target >= n)
                    throw ModelError("state " + std::to_string(x) + " control " + std::to_string(u) +
                                     ": successor index " + std::to_string(t.target) + " out of range");
            pairs_.emplace_back(x, u);
        }
        for (std::size_t f = 0; f < s.families.size(); ++f)
            for (const auto& t : s.families[f].transitions)
                if (t.target >= n)
                    throw ModelError("state " + std::to_string(x) + " family " + std::to_string(f) +
                                     ": successor index " + std::to_string(t.target) + " out of range");
        pair_offset_.push_back(pair_offset_.back() + s.controls.size());
    }
}

bool TotalCostModel::has_families() const noexcept {
    return std::any_of(states_.begin(), states_.end(), [](const StateSpec& s) { return !s.families.empty(); });
}

void TotalCostModel::require_atomic_only(const char* operation) const {
    if (has_families())
        throw ModelError(std::string(operation) +
                         " requires a model without affine control families (Q-factors over a "
                         "continuum parameter have no finite representation)");
}

ExtReal TotalCostModel::max_abs_cost() const {
    ExtReal m = 0.0;
    for (const auto& s : states_) {
        for (const auto& c : s.controls) m = max(m, max(c.cost, -c.cost));
        for (const auto& f : s.families) {
            m = max(m, std::fabs(f.cost_at(f.interval.lo)));
            m = max(m, std::fabs(f.cost_at(f.interval.hi)));
        }
    }
    return m;
}

std::string ValidationReport::to_string() const {
    if (ok()) return "OK";
    std::ostringstream os;
    for (const auto& v : violations) os << v.rule << " at " << v.location << ": " << v.message << "\n";
    return os.str();
}

namespace {

std::string control_location(const TotalCostModel& m, std::size_t x, const std::string& kind,
                             const std::string& id, std::size_t index) {
    std::string name = m.state(x).name.empty() ? std::to_string(x) : m.state(x).name;
    return "state " + name + " / " + kind + " " + (id.empty() ? std::to_string(index) : id);
}

void check_cost_sign(const TotalCostModel& m, ExtReal g, const std::string& where, std::vector<Violation>& out) {
    switch (m.regime()) {
    case Regime::discounted:
        if (!g.is_finite()) {
            out.push_back({"regime D requires finite costs", where, "cost " + to_string(g)});
        } else {
            const ExtReal bound = m.cost_bound() ? ExtReal(*m.cost_bound()) : ExtReal::inf();
            if (ExtReal(std::fabs(g.value())) > bound)
                out.push_back({"cost bound", where,
                               "|g| = " + to_string(ExtReal(std::fabs(g.value()))) + " exceeds b = " + to_string(bound)});
        }
        break;
    case Regime::nonpositive:
        if (g > 0.0) out.push_back({"regime N requires g <= 0", where, "cost " + to_string(g)});
        break;
    case Regime::nonnegative:
        if (g < 0.0) out.push_back({"regime P requires g >= 0", where, "cost " + to_string(g)});
        break;
    }
}

} // namespace

ValidationReport validate_model(const TotalCostModel& m) {
    ValidationReport report;
    auto& out = report.violations;

    const double a = m.discount();
    if (!(a >= 0.0 && a <= 1.0)) out.push_back({"discount range", "model", "alpha = " + to_string(ExtReal(a))});
    switch (m.regime()) {
    case Regime::discounted:
        if (!(a < 1.0)) out.push_back({"regime D requires alpha < 1", "model", "alpha = " + to_string(ExtReal(a))});
        if (m.cost_bound() && !(*m.cost_bound() >= 0.0))
            out.push_back({"cost bound", "model", "declared bound must be nonnegative"});
        break;
    case Regime::nonpositive:
        if (a != 1.0) out.push_back({"regime N requires alpha = 1", "model", "alpha = " + to_string(ExtReal(a))});
        break;
    case Regime::nonnegative:
        if (a != 1.0) out.push_back({"regime P requires alpha = 1", "model", "alpha = " + to_string(ExtReal(a))});
        break;
    }

    for (std::size_t x = 0; x < m.num_states(); ++x) {
        const auto& s = m.state(x);
        if (s.controls.empty() && s.families.empty())
            out.push_back({"nonempty control set", "state " + (s.name.empty() ? std::to_string(x) : s.name),
                           "state has no atomic control and no affine family"});

        for (std::size_t u = 0; u < s.controls.size(); ++u) {
            const auto& c = s.controls[u];
            const std::string where = control_location(m, x, "control", c.id, u);
            double sum = 0.0;
            for (const auto& t : c.transitions) {
                if (!std::isfinite(t.prob) || t.prob < 0.0)
                    out.push_back({"nonnegative probability", where,
                                   "probability " + to_string(ExtReal(std::isnan(t.prob) ? -1.0 : t.prob)) +
                                       " to state " + std::to_string(t.target)});
                sum += t.prob;
            }
            if (!(std::fabs(sum - 1.0) <= kProbabilityTolerance))
                out.push_back({"distribution sum", where, "transition probabilities sum to " + to_string(ExtReal(sum))});
            check_cost_sign(m, c.cost, where, out);
        }

        for (std::size_t f = 0; f < s.families.size(); ++f) {
            const auto& fam = s.families[f];
            const std::string where = control_location(m, x, "family", fam.id, f);
            const auto& iv = fam.interval;
            if (!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo < iv.hi)) {
                out.push_back({"interval", where, "interval must satisfy 0 <= lo < hi <= 1"});
                continue;
            }
            if (!std::isfinite(fam.c0) || !std::isfinite(fam.c1))
                out.push_back({"finite affine coefficients", where, "cost coefficients must be finite"});
            double s0 = 0.0;
            double s1 = 0.0;
            for (const auto& t : fam.transitions) {
                s0 += t.p0;
                s1 += t.p1;
                for (double tt : {iv.lo, iv.hi}) {
                    const double p = t.p0 + t.p1 * tt;
                    if (!(p >= -kProbabilityTolerance && p <= 1.0 + kProbabilityTolerance))
                        out.push_back({"affine probability range", where,
                                       "probability to state " + std::to_string(t.target) + " at t = " +
                                           to_string(ExtReal(tt)) + " is " + to_string(ExtReal(p))});
                }
            }
            if (!(std::fabs(s0 - 1.0) <= kProbabilityTolerance))
                out.push_back({"distribution sum", where, "sum of p0 is " + to_string(ExtReal(s0))});
            if (!(std::fabs(s1) <= kProbabilityTolerance))
                out.push_back({"distribution sum", where, "sum of p1 is " + to_string(ExtReal(s1))});
            check_cost_sign(m, fam.cost_at(iv.lo), where + " at lo", out);
            check_cost_sign(m, fam.cost_at(iv.hi), where + " at hi", out);
        }
    }
    return report;
}

StateSet StateSet::of(std::size_t n, std::initializer_list<std::size_t> xs) {
    StateSet s = none(n);
    for (auto x : xs) s.insert(x);
    return s;
}

std::size_t StateSet::count() const noexcept {
    return static_cast<std::size_t>(std::count(m_.begin(), m_.end(), true));
}

std::vector<std::size_t> StateSet::elements() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m_.size(); ++i)
        if (m_[i]) out.push_back(i);
    return out;
}

std::string StateSet::describe() const {
    if (!m_.empty() && is_full()) return "S";
    std::string s = "{";
    bool first = true;
    for (auto x : elements()) {
        if (!first) s += ",";
        s += std::to_string(x);
        first = false;
    }
    return s + "}";
}

Policy Policy::deterministic(const TotalCostModel& model, std::span<const std::size_t> controls) {
    if (controls.size() != model.num_states())
        throw ModelError("deterministic policy needs one control per state");
    std::vector<Action> actions;
    actions.reserve(controls.size());
    for (std::size_t x = 0; x < controls.size(); ++x) {
        std::vector<double> dist(model.num_controls(x), 0.0);
        if (controls[x] >= dist.size())
            throw ModelError("state " + std::to_string(x) + ": control index " + std::to_string(controls[x]) +
                             " out of range");
        dist[controls[x]] = 1.0;
        actions.emplace_back(std::move(dist));
    }
    return Policy(std::move(actions));
}

Policy Policy::uniform(const TotalCostModel& model) {
    std::vector<Action> actions;
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        const auto nc = model.num_controls(x);
        if (nc > 0) {
            actions.emplace_back(std::vector<double>(nc, 1.0 / static_cast<double>(nc)));
        } else if (!model.state(x).families.empty()) {
            actions.emplace_back(FamilyChoice{0, model.state(x).families[0].interval.midpoint()});
        } else {
            actions.emplace_back(std::vector<double>{});
        }
    }
    return Policy(std::move(actions));
}

double Policy::probability(std::size_t x, std::size_t u) const {
    const auto* dist = std::get_if<std::vector<double>>(&actions_.at(x));
    if (!dist || u >= dist->size()) return 0.0;
    return (*dist)[u];
}

bool Policy::is_deterministic() const noexcept {
    for (std::size_t x = 0; x < actions_.size(); ++x)
        if (!deterministic_control(x)) return false;
    return true;
}

std::optional<std::size_t> Policy::deterministic_control(std::size_t x) const {
    const auto* dist = std::get_if<std::vector<double>>(&actions_.at(x));
    if (!dist) return std::nullopt;
    for (std::size_t u = 0; u < dist->size(); ++u)
        if ((*dist)[u] == 1.0) return u;
    return std::nullopt;
}

std::vector<std::size_t> Policy::controls() const {
    std::vector<std::size_t> out(actions_.size());
    for (std::size_t x = 0; x < actions_.size(); ++x) {
        auto u = deterministic_control(x);
        if (!u) throw ModelError("policy is not deterministic over atomic controls at state " + std::to_string(x));
        out[x] = *u;
    }
    return out;
}

std::string Policy::describe() const {
    std::string s;
    for (std::size_t x = 0; x < actions_.size(); ++x) {
        if (x) s += " ";
        if (auto u = deterministic_control(x)) {
            s += std::to_string(*u);
        } else if (const auto* fc = std::get_if<FamilyChoice>(&actions_[x])) {
            s += "f" + std::to_string(fc->family) + "@" + to_string(ExtReal(fc->parameter));
        } else {
            const auto& d = std::get<std::vector<double>>(actions_[x]);
            s += "[";
            for (std::size_t u = 0; u < d.size(); ++u) {
                if (u) s += "|";
                s += to_string(ExtReal(d[u]));
            }
            s += "]";
        }
    }
    return s;
}

std::vector<std::string> validate_policy(const TotalCostModel& model, const Policy& policy) {
    std::vector<std::string> problems;
    if (policy.size() != model.num_states()) {
        problems.push_back("policy covers " + std::to_string(policy.size()) + " states, model has " +
                           std::to_string(model.num_states()));
        return problems;
    }
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        const auto& act = policy.action(x);
        if (const auto* dist = std::get_if<std::vector<double>>(&act)) {
            if (dist->size() != model.num_controls(x)) {
                problems.push_back("state " + std::to_string(x) + ": distribution has wrong length");
                continue;
            }
            double sum = 0.0;
            for (double p : *dist) {
                if (!(p >= 0.0)) problems.push_back("state " + std::to_string(x) + ": negative probability");
                sum += p;
            }
            if (!(std::fabs(sum - 1.0) <= kProbabilityTolerance))
                problems.push_back("state " + std::to_string(x) + ": distribution sums to " + to_string(ExtReal(sum)));
        } else {
            const auto& fc = std::get<FamilyChoice>(act);
            const auto& fams = model.state(x).families;
            if (fc.family >= fams.size()) {
                problems.push_back("state " + std::to_string(x) + ": family index out of range");
                continue;
            }
            if (!fams[fc.family].interval.contains(fc.parameter))
                problems.push_back("state " + std::to_string(x) + ": parameter " + to_string(ExtReal(fc.parameter)) +
                                   " outside the family interval");
        }
    }
    return problems;
}

void require_valid_policy(const TotalCostModel& model, const Policy& policy) {
    const auto problems = validate_policy(model, policy);
    if (problems.empty()) return;
    std::string msg = "invalid policy:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ModelError(msg);
}

} // namespace mvpi
