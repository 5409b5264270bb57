#include "skewsim/quadrature.hpp"

#include <cmath>

namespace skewsim {

namespace {

double refine(const RealFunction& f, double a, double b, double fa, double fb, double coarse, double tol, int depth) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    double left = 0.5 * (m - a) * (fa + fm);
    double right = 0.5 * (b - m) * (fm + fb);
    double fine = left + right;
    if (depth <= 0 || std::abs(fine - coarse) <= 3.0 * tol || !std::isfinite(fine)) return fine;
    return refine(f, a, m, fa, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_trapezoid(const RealFunction& f, double a, double b, double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    constexpr int panels = 16;
    double h = (b - a) / panels;
    double total = 0.0;
    double x0 = a;
    double f0 = f(a);
    for (int i = 1; i <= panels; ++i) {
        double x1 = i == panels ? b : a + i * h;
        double f1 = f(x1);
        double coarse = 0.5 * (x1 - x0) * (f0 + f1);
        total += refine(f, x0, x1, f0, f1, coarse, abs_tol / panels, max_depth);
        x0 = x1;
        f0 = f1;
    }
    return total;
}

double midpoint_rule(const RealFunction& f, double a, double b, int n) {
    double h = (b - a) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += f(a + (i + 0.5) * h);
    return acc * h;
}

}  // namespace skewsim
