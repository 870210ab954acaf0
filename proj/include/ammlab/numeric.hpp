#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace ammlab {

// All state/payoff equality checks share one tolerance rule.
inline constexpr double kRelTol = 1e-9;
inline constexpr double kAbsTol = 1e-12;

// Scale used for value comparisons: max(1, |P|, |dy|).
inline double value_scale(double price, double dy) {
    return std::max({1.0, std::abs(price), std::abs(dy)});
}

inline bool approx_equal(double a, double b) {
    const double mag = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= std::max(kAbsTol, kRelTol * mag);
}

inline bool approx_equal(double a, double b, double scale) {
    return std::abs(a - b) <= std::max(kAbsTol, kRelTol * std::abs(scale));
}

inline bool approx_equal(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!approx_equal(a[i], b[i])) return false;
    }
    return true;
}

inline bool approx_le(double a, double b, double scale) {
    return a <= b + std::max(kAbsTol, kRelTol * std::abs(scale));
}

} // namespace ammlab
