#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

/// t_1 for q = 1/2, alpha = 1, L = 1, from an independent shooting run
/// (adaptive RK45, rtol 1e-13) outside this library.
inline constexpr double kGoldenT1Half = 8.040014232117e-4;

struct ShootingResult {
    double t1 = 0.0;          // int_0^L u'^2
    double slope = 0.0;       // u'(0)
    double end_value = 0.0;   // u(L), ~0
    int bisections = 0;
};

namespace detail {

struct ShootState {
    double u = 0.0;
    double du = 0.0;
    double energy = 0.0;
};

/// Dormand-Prince 5(4) integration of u'' = -alpha u+^q, E' = u'^2 over
/// [0, L], with step sizes capped at L / fine_n.
inline ShootState integrate_shot(double q, double alpha, double length, int fine_n, double slope) {
    using V = std::array<double, 3>;
    auto rhs = [&](const V& y) -> V {
        return {y[1], -alpha * std::pow(std::max(y[0], 0.0), q), y[1] * y[1]};
    };
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double h_max = length / fine_n;
    const double rtol = 1e-13;
    double x = 0.0;
    double h = h_max * 1e-3;
    V y{0.0, slope, 0.0};
    V k1 = rhs(y);
    // running magnitudes, used as the absolute part of the error scale
    V typical{std::abs(slope) * length, std::abs(slope), slope * slope * length};
    long steps = 0;
    while (x < length) {
        detail::require(++steps < 50'000'000L, ErrorCode::NoConvergence, "shooting integrator exceeded its step budget");
        h = std::min({h, h_max, length - x});
        auto comb = [&](std::initializer_list<std::pair<double, const V*>> terms) {
            V out = y;
            for (const auto& [coef, k] : terms)
                for (int i = 0; i < 3; ++i) out[i] += h * coef * (*k)[i];
            return out;
        };
        const V k2 = rhs(comb({{a21, &k1}}));
        const V k3 = rhs(comb({{a31, &k1}, {a32, &k2}}));
        const V k4 = rhs(comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const V k5 = rhs(comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const V k6 = rhs(comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const V y5 = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const V k7 = rhs(y5);
        double err = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = rtol * (std::max(std::abs(y[i]), std::abs(y5[i])) + typical[i]) + 1e-300;
            err = std::max(err, std::abs(e) / scale);
        }
        if (err <= 1.0 || h <= 1e-14 * length) {
            x += h;
            y = y5;
            k1 = k7;
            for (int i = 0; i < 3; ++i) typical[i] = std::max(typical[i], std::abs(y[i]));
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }
    return {y[0], y[1], y[2]};
}

} // namespace detail

/// Independent reference for the lam = 1 frozen problem in 1D:
/// -u'' = alpha u^q on (0, L), u(0) = u(L) = 0, solved by bisection on the
/// initial slope. Returns the Dirichlet energy t_1 = int u'^2.
inline ShootingResult oracle_shoot(double q, double alpha, double length, int fine_n = 8192) {
    detail::require(q > 0.0 && q < 1.0, ErrorCode::InvalidArgument, "oracle needs q in (0,1)");
    detail::require(alpha > 0.0 && length > 0.0, ErrorCode::InvalidArgument, "oracle needs alpha > 0 and L > 0");
    detail::require(fine_n >= 4096, ErrorCode::InvalidArgument, "oracle needs fineN >= 4096");
    auto end_value = [&](double s) { return detail::integrate_shot(q, alpha, length, fine_n, s).u; };

    // u(L; s) is increasing in s: small slopes cross zero before L.
    double lo = 1.0;
    double hi = 1.0;
    while (end_value(lo) > 0.0) {
        lo *= 0.5;
        detail::require(lo > 1e-300, ErrorCode::NoConvergence, "oracle could not bracket the initial slope");
    }
    while (end_value(hi) <= 0.0) {
        hi *= 2.0;
        detail::require(hi < 1e300, ErrorCode::NoConvergence, "oracle could not bracket the initial slope");
    }
    ShootingResult out;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ++out.bisections;
        if (end_value(mid) > 0.0) hi = mid;
        else lo = mid;
    }
    out.slope = 0.5 * (lo + hi);
    const auto state = detail::integrate_shot(q, alpha, length, fine_n, out.slope);
    out.t1 = state.energy;
    out.end_value = state.u;
    return out;
}

} // namespace kirchhoff
