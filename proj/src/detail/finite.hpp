#pragma once

#include "bread/error.hpp"

#include <cmath>
#include <string>

namespace bread::detail {

inline void require_finite(const char* term, double value)
{
    if (!std::isfinite(value)) {
        throw NumericError(term, std::string("non-finite loss term '") + term + "'");
    }
}

inline int sign(double v) noexcept
{
    return (v > 0.0) - (v < 0.0);
}

}  // namespace bread::detail
