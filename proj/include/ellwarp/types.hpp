#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ellwarp {

using idx = std::int64_t;
using real = double;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// |a - b| <= tol * max(|a|, |b|), with exact zero treated as equal.
inline bool almost_equal(real a, real b, real rel_tol) {
    if (a == b) return true;
    const real scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= rel_tol * scale;
}

inline idx ceil_div(idx a, idx b) { return (a + b - 1) / b; }

}  // namespace ellwarp
