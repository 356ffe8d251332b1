#pragma once

#include <cmath>
#include <functional>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

namespace detail {

inline double simpson_step(const std::function<double(double)>& fn, double a, double fa, double m, double fm, double b,
                           double fb, double whole, double tol, int depth, int& evaluations) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = fn(lm);
    const double frm = fn(rm);
    evaluations += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(fn, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, evaluations) +
           simpson_step(fn, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, evaluations);
}

} // namespace detail

/// Adaptive Simpson quadrature of fn over [a,b]. `rel_tol` is relative to a
/// coarse estimate of the integral magnitude.
inline double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double rel_tol = 1e-8,
                               int max_depth = 48) {
    detail::require(rel_tol > 0.0, ErrorCode::InvalidArgument, "quadrature tolerance must be positive");
    if (a == b) return 0.0;
    const double fa = fn(a);
    const double fb = fn(b);
    const double m = 0.5 * (a + b);
    const double fm = fn(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double scale = std::abs(b - a) / 3.0 * (std::abs(fa) + std::abs(fm) + std::abs(fb));
    const double tol = rel_tol * (scale > 0.0 ? scale : 1.0);
    int evaluations = 3;
    return detail::simpson_step(fn, a, fa, m, fm, b, fb, whole, tol, max_depth, evaluations);
}

} // namespace kirchhoff
