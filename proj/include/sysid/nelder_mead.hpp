#pragma once

#include <functional>

#include "sysid/common.hpp"

namespace sysid {

struct NelderMeadResult {
    Vector x;
    double value = 0;
    int evaluations = 0;
};

/// Minimizes `f` starting from a simplex around `x0` with edge `step`.
/// Stops when the spread of simplex values falls below `ftol` or after
/// `max_evals` evaluations. Non-finite values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             double step, double ftol, int max_evals);

} // namespace sysid
