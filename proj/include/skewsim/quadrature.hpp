#pragma once

#include "skewsim/function.hpp"

namespace skewsim {

/// Adaptive trapezoid rule on [a, b] with an absolute error target. The
/// interval is first cut into 16 panels so that integrands vanishing at a
/// few sample points are not mistaken for zero.
double adaptive_trapezoid(const RealFunction& f, double a, double b, double abs_tol = 1e-10, int max_depth = 30);

/// Composite midpoint rule with n panels; never samples the endpoints, so
/// integrable endpoint singularities stay finite.
double midpoint_rule(const RealFunction& f, double a, double b, int n);

}  // namespace skewsim
