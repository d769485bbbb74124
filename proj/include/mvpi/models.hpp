#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mvpi/model.hpp"

namespace mvpi {

/// Named model with known optimal costs.
struct Fixture {
    std::string name;
    TotalCostModel model;
    ValueVector Jstar;
    std::optional<QVector> Qstar;
    std::string commentary;
};

/**
 * Built-in fixtures:
 *  FX-N2   two states, nonpositive costs; a greedy policy that loops forever
 *  FX-P2   two states, nonnegative costs; policy iteration gets stuck
 *  FX-P3a  three states with a continuum of controls; value iteration from 0 stops short
 *  FX-P3b  three states with a continuum of controls; a policy cost that is also a fixed point
 *  FX-P4   unit-cost chain 2 -> 1 -> 0
 *  FX-D    three-state discounted model (alpha = 0.9)
 */
Fixture fixture(const std::string& name);
std::vector<std::string> fixture_names();

struct RandomModelParams {
    std::size_t num_states = 6;
    std::size_t controls_per_state = 3;
    Regime regime = Regime::nonnegative;
    /// Costs are drawn from [0, b], [-b, 0] or [-b, b].
    double cost_range = 1.0;
    /// Every control moves to the zero-cost absorbing state 0 with probability at least 0.1.
    bool absorbing = true;
    /// Discount for regime D; drawn from [0.5, 0.9] when empty.
    std::optional<double> discount;
    /// Probability that a state gets a free (zero-cost) exit to state 0 (regime P).
    double free_exit_probability = 0.25;
    std::size_t max_successors = 3;
};

struct RandomModel {
    TotalCostModel model;
    ValueVector Jstar;
    QVector Qstar;
    std::uint64_t seed = 0;
};

/// Seeded random model with a ground-truth J* (value iteration polished by exact policy evaluation).
RandomModel random_model(std::uint64_t seed, const RandomModelParams& params = {});

/// Uniform doubles in [0, 1) with the same stream on every platform (53 high bits of mt19937_64).
class SeededUniform {
public:
    explicit SeededUniform(std::uint64_t seed) : gen_(seed) {}
    double next();
    double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 gen_;
};

/// Optimal costs by value iteration from 0 with classified infinite states pinned, then exact policy
/// iteration from the greedy policy when every value is finite.
ValueVector optimal_cost_oracle(const TotalCostModel& model, double tolerance = 1e-12,
                                std::size_t max_iterations = 1000000);

// ---------------------------------------------------------------------------
// Countable "ladder" model: from state 0
// control u moves to state u, from x >= 1 to x - 1; cost 1 at state 1 only.

/// Nonnegative integer or +inf.
class ExtInt {
public:
    constexpr ExtInt() = default;
    constexpr ExtInt(std::int64_t v) : v_(v), inf_(false) {} // NOLINT(google-explicit-constructor)
    static constexpr ExtInt inf() {
        ExtInt r;
        r.inf_ = true;
        return r;
    }
    constexpr bool is_inf() const noexcept { return inf_; }
    constexpr std::int64_t value() const noexcept { return v_; }

    friend constexpr ExtInt operator+(ExtInt a, ExtInt b) {
        if (a.inf_ || b.inf_) return inf();
        return ExtInt(a.v_ + b.v_);
    }
    friend constexpr bool operator==(ExtInt a, ExtInt b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
    }
    friend constexpr bool operator<(ExtInt a, ExtInt b) {
        if (a.inf_) return false;
        if (b.inf_) return true;
        return a.v_ < b.v_;
    }

private:
    std::int64_t v_ = 0;
    bool inf_ = false;
};

std::string to_string(ExtInt v);

/// Function on {0, 1, 2, ...}: explicit prefix, then a constant tail.
class TailConstantVector {
public:
    TailConstantVector() = default;
    TailConstantVector(std::vector<ExtInt> prefix, ExtInt tail);

    const std::vector<ExtInt>& prefix() const noexcept { return prefix_; }
    ExtInt tail() const noexcept { return tail_; }
    ExtInt at(std::size_t x) const { return x < prefix_.size() ? prefix_[x] : tail_; }

    /// Adds c to every entry.
    TailConstantVector plus(std::int64_t c) const;
    /// "(0, 1, 1, 0, 0, ...)" style rendering.
    std::string describe() const;

    friend bool operator==(const TailConstantVector&, const TailConstantVector&) = default;

private:
    std::vector<ExtInt> prefix_;
    ExtInt tail_;
};

TailConstantVector ladder_T(const TailConstantVector& J);

/// lim_k T^k(J) by exact pattern detection; throws ConvergenceError when no pattern appears within the cap.
TailConstantVector ladder_limit(const TailConstantVector& J, std::size_t cap = 10000);

/// Level m of the transfinite ladder: level 0 is lim T^k(0), level m+1 is lim T^k(level m).
TailConstantVector ladder_level(std::size_t m, std::size_t inner_cap = 10000);

} // namespace mvpi
