#include "mvpi/ext_real.hpp"

#include <charconv>
#include <ostream>

#include "mvpi/errors.hpp"

namespace mvpi {

std::string to_string(ExtReal x) {
    if (x.is_pos_inf()) return "inf";
    if (x.is_neg_inf()) return "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x.value());
    return std::string(buf, res.ptr);
}

ExtReal parse_ext_real(const std::string& text) {
    if (text == "inf" || text == "+inf" || text == "\xE2\x88\x9E" || text == "Infinity") return ExtReal::inf();
    if (text == "-inf" || text == "-\xE2\x88\x9E" || text == "\xE2\x88\x92inf" || text == "-Infinity")
        return ExtReal::neg_inf();
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || v != v)
        throw Error("not an extended real: '" + text + "'");
    return v;
}

std::ostream& operator<<(std::ostream& os, ExtReal x) { return os << to_string(x); }

const char* to_string(BoundDirection d) noexcept {
    switch (d) {
    case BoundDirection::none: return "contraction";
    case BoundDirection::decreasing: return "decreasing";
    case BoundDirection::increasing: return "increasing";
    }
    return "?";
}

} // namespace mvpi
