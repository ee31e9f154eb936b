#pragma once

// Adaptive Simpson quadrature with interval bisection until the local
// Richardson estimate meets the tolerance.

#include <cmath>
#include <stdexcept>

namespace blockquant {

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_floor = 1e-14;
    int max_depth = 48;
};

namespace detail {

template <class F>
double simpson(F&& f, double a, double fa, double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(F&& f, double a, double fa, double b, double fb, double m, double fm,
             double whole, double tol, int depth, bool& converged) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, fa, m, fm, lm, flm);
    const double right = simpson(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    if (depth <= 0) {
        converged = false;
        return left + right;
    }
    return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, converged) +
           adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, converged);
}

}  // namespace detail

// Integrates f over [a, b]. Throws on non-convergence (tolerance not met
// before the bisection depth limit).
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (!(a <= b)) throw std::invalid_argument("integrate: bad interval");
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = detail::simpson(f, a, fa, b, fb, m, fm);
    // two passes: a crude magnitude estimate seeds the relative tolerance
    const double scale = std::fabs(whole);
    const double tol = scale * opt.rel_tol > opt.abs_floor ? scale * opt.rel_tol
                                                           : opt.abs_floor;
    bool converged = true;
    double result = detail::adapt(f, a, fa, b, fb, m, fm, whole, tol,
                                  opt.max_depth, converged);
    if (!converged)
        throw std::runtime_error("integrate: quadrature failed to converge");
    return result;
}

}  // namespace blockquant
