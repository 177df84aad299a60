#pragma once

#include <cstdio>
#include <limits>
#include <stdexcept>
#include <ostream>
#include <string>

namespace risklab {

/// A value on the extended real line. Infinite values are explicit states,
/// never encoded as large doubles.
class ExtReal {
public:
    enum class Kind { Finite, MinusInf, PlusInf };

    constexpr ExtReal() = default;
    constexpr ExtReal(double v) : value_(v) {}  // NOLINT(implicit)

    static constexpr ExtReal minus_inf() { return ExtReal(Kind::MinusInf); }
    static constexpr ExtReal plus_inf() { return ExtReal(Kind::PlusInf); }

    constexpr Kind kind() const { return kind_; }
    constexpr bool finite() const { return kind_ == Kind::Finite; }
    constexpr bool is_minus_inf() const { return kind_ == Kind::MinusInf; }
    constexpr bool is_plus_inf() const { return kind_ == Kind::PlusInf; }

    /// Finite value; throws if infinite.
    double value() const {
        if (!finite()) throw std::logic_error("ExtReal::value() on infinite value");
        return value_;
    }

    /// Finite value or +/- infinity as a double, for arithmetic at the call site.
    constexpr double as_double() const {
        switch (kind_) {
        case Kind::MinusInf: return -std::numeric_limits<double>::infinity();
        case Kind::PlusInf: return std::numeric_limits<double>::infinity();
        default: return value_;
        }
    }

    std::string to_string() const {
        switch (kind_) {
        case Kind::MinusInf: return "-inf";
        case Kind::PlusInf: return "+inf";
        default: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", value_);
            return buf;
        }
        }
    }

    friend std::ostream& operator<<(std::ostream& os, const ExtReal& x) { return os << x.to_string(); }

private:
    constexpr explicit ExtReal(Kind k) : kind_(k) {}
    Kind kind_ = Kind::Finite;
    double value_ = 0.0;
};

}  // namespace risklab
