#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "mvpi/ext_real.hpp"

namespace mvpi {

/**
 * Fixed-length vector of extended reals. The tag keeps cost functions on
 * states (ValueVector) and on state-control pairs (QVector) apart.
 */
template <class Tag>
class ExtVector {
public:
    using value_type = ExtReal;

    ExtVector() = default;
    explicit ExtVector(std::size_t n, ExtReal fill = 0.0) : v_(n, fill) {}
    ExtVector(std::initializer_list<ExtReal> init) : v_(init) {}
    explicit ExtVector(std::vector<ExtReal> values) : v_(std::move(values)) {}

    std::size_t size() const noexcept { return v_.size(); }
    bool empty() const noexcept { return v_.empty(); }

    ExtReal& operator[](std::size_t i) { return v_[i]; }
    ExtReal operator[](std::size_t i) const { return v_[i]; }

    auto begin() noexcept { return v_.begin(); }
    auto end() noexcept { return v_.end(); }
    auto begin() const noexcept { return v_.begin(); }
    auto end() const noexcept { return v_.end(); }

    const std::vector<ExtReal>& values() const noexcept { return v_; }

    friend bool operator==(const ExtVector&, const ExtVector&) = default;

private:
    std::vector<ExtReal> v_;
};

struct ValueTag;
struct QTag;

/// J: one extended-real cost per state.
using ValueVector = ExtVector<ValueTag>;
/// Q: one extended-real cost per (state, atomic control) pair.
using QVector = ExtVector<QTag>;

/// Sup-norm distance; equal infinities contribute 0, mismatched ones +inf.
template <class Tag>
double sup_distance(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = abs_diff(a[i], b[i]);
        if (e > d) d = e;
    }
    return d;
}

/// Sup-norm restricted to entries where mask[i] is false (masked entries are skipped).
template <class Tag>
double sup_distance_excluding(const ExtVector<Tag>& a, const ExtVector<Tag>& b,
                              const std::vector<bool>& skip) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!skip.empty() && skip[i]) continue;
        const double e = abs_diff(a[i], b[i]);
        if (e > d) d = e;
    }
    return d;
}

/// a <= b + tol elementwise (tol = 0 means exact comparison).
template <class Tag>
bool all_leq(const ExtVector<Tag>& a, const ExtVector<Tag>& b, double tol = 0.0) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i] + tol) return false;
    return true;
}

/// Largest violation of a <= b (0 if it holds), inf when an infinite gap appears.
template <class Tag>
double leq_violation(const ExtVector<Tag>& a, const ExtVector<Tag>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] <= b[i]) continue;
        const ExtReal gap = a[i] - b[i];
        const double g = gap.is_infinite() ? std::numeric_limits<double>::infinity() : gap.value();
        if (g > worst) worst = g;
    }
    return worst;
}

/// c * v elementwise under ExtReal conventions.
template <class Tag>
ExtVector<Tag> scaled(const ExtVector<Tag>& v, double c) {
    ExtVector<Tag> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = ExtReal(c) * v[i];
    return out;
}

/// max(lo, min(hi, v)) elementwise.
template <class Tag>
ExtVector<Tag> clamped(const ExtVector<Tag>& v, const ExtVector<Tag>& lo, const ExtVector<Tag>& hi) {
    ExtVector<Tag> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = max(lo[i], min(hi[i], v[i]));
    return out;
}

template <class Tag>
std::string to_string(const ExtVector<Tag>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += to_string(v[i]);
    }
    return s + ")";
}

} // namespace mvpi
