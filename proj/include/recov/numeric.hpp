#pragma once

#include <cmath>
#include <cstdint>

namespace recov {

// Banker's rounding, independent of the ambient FP rounding mode.
// Only used on nonnegative quantities (counts, percentile sizes).
inline std::int64_t round_half_even(double x) {
    const double f = std::floor(x);
    const double frac = x - f;
    std::int64_t r = static_cast<std::int64_t>(f);
    if (frac > 0.5) {
        ++r;
    } else if (frac == 0.5 && (r % 2) != 0) {
        ++r;
    }
    return r;
}

}  // namespace recov
