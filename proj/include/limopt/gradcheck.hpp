#pragma once

#include <functional>

#include "limopt/vec.hpp"

namespace limopt {

// Central-difference gradient: coordinate i gets (f(x+h e_i) - f(x-h e_i)) / (2h).
// Exact for polynomials of degree <= 2 up to rounding; O(h^2) otherwise.
ParamVector finite_diff_gradient(const std::function<double(const ParamVector&)>& f,
                                 const ParamVector& x, double h);

// max over coordinates of |a_i - b_i| / max(1, |a_i|, |b_i|) — relative where
// entries are large, absolute near zero.
double max_relative_error(const ParamVector& a, const ParamVector& b);

}  // namespace limopt
