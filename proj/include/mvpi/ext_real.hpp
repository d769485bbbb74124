#pragma once

#include <cmath>
#include <compare>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>

namespace mvpi {

/**
 * Extended real number in [-inf, +inf].
 *
 * Arithmetic follows the total-cost conventions:
 *   inf - inf = -inf + inf = +inf
 *   0 * (+-inf) = (+-inf) * 0 = 0
 * NaN is never stored; constructing from NaN throws std::domain_error.
 */
class ExtReal {
public:
    constexpr ExtReal() noexcept = default;

    // NOLINTNEXTLINE(google-explicit-constructor): doubles convert implicitly.
    constexpr ExtReal(double v) : v_(v) {
        if (v != v) throw std::domain_error("ExtReal: NaN is not representable");
    }

    static constexpr ExtReal inf() noexcept { return from_raw(std::numeric_limits<double>::infinity()); }
    static constexpr ExtReal neg_inf() noexcept { return from_raw(-std::numeric_limits<double>::infinity()); }

    constexpr double value() const noexcept { return v_; }
    constexpr bool is_finite() const noexcept { return v_ > -kInf && v_ < kInf; }
    constexpr bool is_pos_inf() const noexcept { return v_ == kInf; }
    constexpr bool is_neg_inf() const noexcept { return v_ == -kInf; }
    constexpr bool is_infinite() const noexcept { return !is_finite(); }

    friend constexpr ExtReal operator+(ExtReal a, ExtReal b) noexcept {
        if (a.v_ == kInf || b.v_ == kInf) return inf();
        return from_raw(a.v_ + b.v_);
    }
    friend constexpr ExtReal operator-(ExtReal a) noexcept { return from_raw(-a.v_); }
    friend constexpr ExtReal operator-(ExtReal a, ExtReal b) noexcept { return a + (-b); }
    friend constexpr ExtReal operator*(ExtReal a, ExtReal b) noexcept {
        if (a.v_ == 0.0 || b.v_ == 0.0) return from_raw(0.0);
        return from_raw(a.v_ * b.v_);
    }
    constexpr ExtReal& operator+=(ExtReal b) noexcept { return *this = *this + b; }
    constexpr ExtReal& operator-=(ExtReal b) noexcept { return *this = *this - b; }
    constexpr ExtReal& operator*=(ExtReal b) noexcept { return *this = *this * b; }

    friend constexpr bool operator==(ExtReal a, ExtReal b) noexcept { return a.v_ == b.v_; }
    friend constexpr std::strong_ordering operator<=>(ExtReal a, ExtReal b) noexcept {
        if (a.v_ < b.v_) return std::strong_ordering::less;
        if (a.v_ > b.v_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    static constexpr ExtReal from_raw(double v) noexcept {
        ExtReal r;
        r.v_ = v;
        return r;
    }
    double v_ = 0.0;
};

constexpr ExtReal min(ExtReal a, ExtReal b) noexcept { return b < a ? b : a; }
constexpr ExtReal max(ExtReal a, ExtReal b) noexcept { return a < b ? b : a; }

/// |a - b| with equal infinities at distance 0 and mismatched infinities at +inf.
inline double abs_diff(ExtReal a, ExtReal b) noexcept {
    if (a == b) return 0.0;
    if (a.is_infinite() || b.is_infinite()) return std::numeric_limits<double>::infinity();
    return std::fabs(a.value() - b.value());
}

/// Renders finite values with round-trip precision and infinities as "inf" / "-inf".
std::string to_string(ExtReal x);

/// Parses a number or one of the literals "inf", "+inf", "-inf", "∞", "-∞".
ExtReal parse_ext_real(const std::string& text);

std::ostream& operator<<(std::ostream& os, ExtReal x);

} // namespace mvpi
