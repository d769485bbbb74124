#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mvpi/errors.hpp"
#include "mvpi/ext_real.hpp"
#include "mvpi/ext_vector.hpp"

namespace mvpi {

/// Problem class: discounted bounded (D), nonpositive (N) or nonnegative (P) costs.
enum class Regime { discounted, nonpositive, nonnegative };

char regime_letter(Regime r) noexcept;
Regime parse_regime(const std::string& text);

/// Absolute tolerance for probability rows and distributions.
inline constexpr double kProbabilityTolerance = 1e-12;

struct Transition {
    std::size_t target = 0;
    double prob = 0.0;
};

struct AtomicControl {
    std::string id;
    ExtReal cost;
    std::vector<Transition> transitions;
};

/// Parameter interval inside [0, 1] with per-endpoint closedness.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    bool lo_closed = false;
    bool hi_closed = false;

    bool contains(double t) const noexcept {
        const bool above = lo_closed ? t >= lo : t > lo;
        const bool below = hi_closed ? t <= hi : t < hi;
        return above && below;
    }
    double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

struct AffineTransition {
    std::size_t target = 0;
    double p0 = 0.0;
    double p1 = 0.0;
};

/**
 * Continuum of controls indexed by t in an interval: the one-stage cost is
 * c0 + c1*t and the probability of moving to target is p0 + p1*t.
 */
struct AffineFamily {
    std::string id;
    Interval interval;
    double c0 = 0.0;
    double c1 = 0.0;
    std::vector<AffineTransition> transitions;

    double cost_at(double t) const noexcept { return c0 + c1 * t; }
};

struct StateSpec {
    std::string name;
    std::vector<AtomicControl> controls;
    std::vector<AffineFamily> families;
};

/**
 * Finite-state total-cost model.
 *
 * Atomic (state, control) pairs are numbered consecutively state by state;
 * pair_index(x, u) gives the flat index used by QVector. Construction only
 * checks structural consistency (successor indices in range); the regime
 * and probability invariants are reported by validate_model().
 */
class TotalCostModel {
public:
    TotalCostModel() = default;
    TotalCostModel(std::vector<StateSpec> states, double discount, Regime regime,
                   std::optional<double> cost_bound = std::nullopt);

    std::size_t num_states() const noexcept { return states_.size(); }
    std::span<const StateSpec> states() const noexcept { return states_; }
    const StateSpec& state(std::size_t x) const { return states_.at(x); }

    std::size_t num_controls(std::size_t x) const { return states_.at(x).controls.size(); }
    const AtomicControl& control(std::size_t x, std::size_t u) const { return states_.at(x).controls.at(u); }

    std::size_t num_pairs() const noexcept { return pair_offset_.empty() ? 0 : pair_offset_.back(); }
    std::size_t pair_offset(std::size_t x) const { return pair_offset_.at(x); }
    std::size_t pair_index(std::size_t x, std::size_t u) const { return pair_offset_.at(x) + u; }
    /// Inverse of pair_index.
    std::pair<std::size_t, std::size_t> pair_at(std::size_t index) const { return pairs_.at(index); }

    double discount() const noexcept { return discount_; }
    Regime regime() const noexcept { return regime_; }
    std::optional<double> cost_bound() const noexcept { return cost_bound_; }
    bool has_families() const noexcept;

    /// Throws ModelError naming `operation` when the model has affine families.
    void require_atomic_only(const char* operation) const;

    /// Largest |g| over atomic controls and family endpoints.
    ExtReal max_abs_cost() const;

private:
    std::vector<StateSpec> states_;
    double discount_ = 1.0;
    Regime regime_ = Regime::nonnegative;
    std::optional<double> cost_bound_;
    std::vector<std::size_t> pair_offset_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

struct Violation {
    std::string rule;      ///< short invariant name, e.g. "distribution sum"
    std::string location;  ///< e.g. "state 1 / control go"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string to_string() const;
};

ValidationReport validate_model(const TotalCostModel& model);

/// Boolean membership over states (the set B of a partition parameter).
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::vector<bool> members) : m_(std::move(members)) {}
    static StateSet all(std::size_t n) { return StateSet(std::vector<bool>(n, true)); }
    static StateSet none(std::size_t n) { return StateSet(std::vector<bool>(n, false)); }
    static StateSet of(std::size_t n, std::initializer_list<std::size_t> xs);

    std::size_t universe() const noexcept { return m_.size(); }
    bool contains(std::size_t x) const { return m_.at(x); }
    void insert(std::size_t x) { m_.at(x) = true; }
    void erase(std::size_t x) { m_.at(x) = false; }
    std::size_t count() const noexcept;
    bool is_full() const noexcept { return count() == m_.size(); }
    bool is_empty() const noexcept { return count() == 0; }
    const std::vector<bool>& members() const noexcept { return m_; }
    std::vector<std::size_t> elements() const;
    /// "S", "{}" or "{0,2,5}".
    std::string describe() const;

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<bool> m_;
};

/// Boolean membership over atomic pairs (flat pair indices).
class PairSet {
public:
    PairSet() = default;
    explicit PairSet(std::vector<bool> members) : m_(std::move(members)) {}
    static PairSet all(std::size_t n) { return PairSet(std::vector<bool>(n, true)); }
    static PairSet none(std::size_t n) { return PairSet(std::vector<bool>(n, false)); }

    std::size_t universe() const noexcept { return m_.size(); }
    bool contains(std::size_t i) const { return m_.at(i); }
    void insert(std::size_t i) { m_.at(i) = true; }
    const std::vector<bool>& members() const noexcept { return m_; }

private:
    std::vector<bool> m_;
};

/// Deterministic parameter choice inside an affine family.
struct FamilyChoice {
    std::size_t family = 0;
    double parameter = 0.0;

    friend bool operator==(const FamilyChoice&, const FamilyChoice&) = default;
};

/**
 * Stationary policy: per state either a distribution over the atomic
 * controls of that state or a parameter inside one of its affine families.
 */
class Policy {
public:
    using Action = std::variant<std::vector<double>, FamilyChoice>;

    Policy() = default;
    explicit Policy(std::vector<Action> actions) : actions_(std::move(actions)) {}

    static Policy deterministic(const TotalCostModel& model, std::span<const std::size_t> controls);
    static Policy deterministic(const TotalCostModel& model, std::initializer_list<std::size_t> controls) {
        return deterministic(model, std::span<const std::size_t>(controls.begin(), controls.size()));
    }
    /// Uniform over atomic controls; states with only families take their interval midpoint.
    static Policy uniform(const TotalCostModel& model);

    std::size_t size() const noexcept { return actions_.size(); }
    const Action& action(std::size_t x) const { return actions_.at(x); }
    /// mu(u | x) for an atomic control; 0 when x uses an affine family.
    double probability(std::size_t x, std::size_t u) const;

    bool is_deterministic() const noexcept;
    std::optional<std::size_t> deterministic_control(std::size_t x) const;
    /// Per-state control indices; throws ModelError if some state is randomized or uses a family.
    std::vector<std::size_t> controls() const;
    std::string describe() const;

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::vector<Action> actions_;
};

/// Empty when the policy is valid for the model.
std::vector<std::string> validate_policy(const TotalCostModel& model, const Policy& policy);
/// Throws ModelError listing the problems reported by validate_policy().
void require_valid_policy(const TotalCostModel& model, const Policy& policy);

} // namespace mvpi
