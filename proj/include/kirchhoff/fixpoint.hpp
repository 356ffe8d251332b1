#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kirchhoff/branch.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/grid.hpp"
#include "kirchhoff/random.hpp"
#include "kirchhoff/sublinear.hpp"

namespace kirchhoff {

enum class Route { LambdaBisect, TEquation };

inline std::string_view to_string(Route r) { return r == Route::LambdaBisect ? "lambda" : "t"; }

/// The Kirchhoff solution (u, lam, t) with lam = K(t) and t = Phi(u) in I.
struct KirchhoffSolution {
    GridFunction u;
    double t_tilde = 0.0;
    double lam_tilde = 0.0;
    KirchhoffBranch branch = KirchhoffBranch::tan(1);
    double kirchhoff_residual = 0.0;
    Route route = Route::TEquation;
    int inner_solves = 0;
    double localization_error = 0.0;   // |psi_inverse(lam) - t|
    double boundary_distance = 0.0;    // distance of t to the ends of I
    double phi_u1 = std::numeric_limits<double>::quiet_NaN();  // t-route only
};

struct FixpointOptions {
    FrozenOptions frozen;
    double root_tol = 1e-10;
    double lam_min = 1e-8;
    double lam_max = 1e8;
    double lam_start = 1.0;
    double residual_tol = 1e-7;
    double localization_tol = 1e-9;
    /// Optional initial t-bracket for the t-route, widened toward the ends of
    /// I until the root is enclosed.
    std::optional<std::pair<double, double>> t_bracket;
};

/// ||K(t) A u - M(alpha . f(u))|| / ||M(alpha . f(u))||.
inline double kirchhoff_residual(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                 const KirchhoffBranch& branch, const GridFunction& u) {
    const double t = dirichlet_energy(op, u);
    return frozen_residual(op, coeff, nl, eval_K(branch, t), u);
}

namespace detail {

inline double branch_distance(const KirchhoffBranch& branch, double t) {
    return std::min(t - branch.lower(), branch.upper() - t);
}

/// Fills the derived fields of a solution and enforces its invariants.
inline void finalize_solution(KirchhoffSolution& sol, const DiscreteLaplacian& op, const Coefficient& coeff,
                              const Nonlinearity& nl, const FixpointOptions& opts) {
    const auto& branch = sol.branch;
    if (!branch.contains(sol.t_tilde)) {
        std::ostringstream os;
        os.precision(17);
        os << "computed t = " << sol.t_tilde << " left the branch (" << branch.lower() << ", " << branch.upper()
           << ")";
        fail(ErrorCode::NoConvergence, os.str());
    }
    sol.lam_tilde = eval_K(branch, sol.t_tilde);
    sol.boundary_distance = branch_distance(branch, sol.t_tilde);
    sol.kirchhoff_residual = frozen_residual(op, coeff, nl, sol.lam_tilde, sol.u);
    sol.localization_error = std::abs(psi_inverse(branch, sol.lam_tilde) - sol.t_tilde);
    for (double v : sol.u.values) {
        require(v > 0.0, ErrorCode::NoConvergence, "Kirchhoff solution is not strictly positive");
    }
    if (!(sol.kirchhoff_residual <= opts.residual_tol)) {
        fail(ErrorCode::NoConvergence,
             "Kirchhoff residual " + std::to_string(sol.kirchhoff_residual) + " exceeds tolerance");
    }
    if (!(sol.localization_error <= opts.localization_tol * std::max(1.0, sol.t_tilde))) {
        fail(ErrorCode::NoConvergence, "psi_inverse(lam) does not reproduce t within tolerance");
    }
}

inline std::string no_crossing_message(const KirchhoffBranch& branch, const std::string& detail_text) {
    std::ostringstream os;
    os.precision(12);
    os << "no root of the fixed-point equation on " << branch.name() << " with I = (" << branch.lower() << ", "
       << branch.upper() << "): " << detail_text;
    if (!branch.range_full()) {
        os << " [branch range of K is (" << branch.range_low() << ", " << branch.range_high()
           << "), not (0, +inf); existence is not guaranteed on such branches]";
    }
    return os.str();
}

} // namespace detail

/// phi(u, lam) = lam Phi(u) - J(u) - int_0^lam psi_inverse.
inline double phi_aux(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                      const KirchhoffBranch& branch, const GridFunction& u, double lam) {
    detail::require(lam >= 0.0, ErrorCode::InvalidArgument, "phi_aux needs lam >= 0");
    return lam * dirichlet_energy(op, u) - functional_J(op, coeff, nl, u) - psi_inverse_integral(branch, lam);
}

/// Root of g(lam) = psi_inverse(lam) - Phi(u_lam), u_lam the frozen solution.
/// g is increasing; the bracket is grown geometrically from lam_start within
/// [lam_min, lam_max] and then bisected in log lam.
inline KirchhoffSolution solve_lambda_bisect(const DiscreteLaplacian& op, const Coefficient& coeff,
                                             const Nonlinearity& nl, const KirchhoffBranch& branch,
                                             const FixpointOptions& opts = {}) {
    detail::require(opts.lam_min > 0.0 && opts.lam_max > opts.lam_min, ErrorCode::InvalidArgument,
                    "invalid lambda bracket bounds");
    KirchhoffSolution sol;
    sol.branch = branch;
    sol.route = Route::LambdaBisect;

    struct Sample {
        double lam;
        double g;
        SublinearSolution frozen;
    };
    auto evaluate = [&](double lam, const GridFunction* seed) {
        FrozenOptions fo = opts.frozen;
        fo.seed = seed;
        fo.observer = nullptr;
        auto frozen = solve_frozen(op, coeff, nl, lam, fo);
        ++sol.inner_solves;
        const double g = psi_inverse_extended(branch, lam) - frozen.phi;
        return Sample{lam, g, std::move(frozen)};
    };
    auto converged = [&](const Sample& s) { return std::abs(s.g) <= opts.root_tol * std::max(1.0, s.frozen.phi); };
    auto finish = [&](Sample& s) {
        if (!(s.lam > branch.range_low() && s.lam < branch.range_high())) {
            std::ostringstream os;
            os.precision(12);
            os << "the extended equation is solved at lam = " << s.lam << ", where psi_inverse sits at an end of I";
            detail::fail(ErrorCode::NoCrossing, detail::no_crossing_message(branch, os.str()));
        }
        sol.u = std::move(s.frozen.u);
        sol.t_tilde = dirichlet_energy(op, sol.u);
        detail::finalize_solution(sol, op, coeff, nl, opts);
        return sol;
    };

    const double start = std::clamp(opts.lam_start, opts.lam_min, opts.lam_max);
    Sample first = evaluate(start, nullptr);
    if (converged(first)) return finish(first);

    std::optional<Sample> lo, hi;
    if (first.g < 0.0) {
        lo = std::move(first);
        while (true) {
            const double next = lo->lam * 2.0;
            if (next > opts.lam_max) {
                detail::fail(ErrorCode::NoCrossing,
                             detail::no_crossing_message(branch, "g(lam) < 0 up to lam_max = " +
                                                                     std::to_string(opts.lam_max)));
            }
            // u_lo is a supersolution for every larger lam
            Sample s = evaluate(next, &lo->frozen.u);
            if (converged(s)) return finish(s);
            if (s.g > 0.0) {
                hi = std::move(s);
                break;
            }
            lo = std::move(s);
        }
    } else {
        hi = std::move(first);
        while (true) {
            const double next = hi->lam / 2.0;
            if (next < opts.lam_min) {
                detail::fail(ErrorCode::NoCrossing,
                             detail::no_crossing_message(branch, "g(lam) > 0 down to lam_min = " +
                                                                     std::to_string(opts.lam_min)));
            }
            Sample s = evaluate(next, nullptr);
            if (converged(s)) return finish(s);
            if (s.g < 0.0) {
                lo = std::move(s);
                break;
            }
            hi = std::move(s);
        }
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo->lam * hi->lam);
        if (!(mid > lo->lam && mid < hi->lam) || hi->lam / lo->lam - 1.0 <= 4.0 * std::numeric_limits<double>::epsilon()) {
            Sample& best = std::abs(lo->g) <= std::abs(hi->g) ? *lo : *hi;
            return finish(best);
        }
        Sample s = evaluate(mid, &lo->frozen.u);
        if (converged(s)) return finish(s);
        if (s.g < 0.0) lo = std::move(s);
        else hi = std::move(s);
    }
    detail::fail(ErrorCode::NoConvergence, "lambda bisection did not converge");
}

namespace detail {

/// log(K(t)^p t) - log(target); -inf where K(t) t vanishes.
inline double log_t_equation(const KirchhoffBranch& branch, double p, double log_target, double t) {
    const double k = branch.value(t);
    if (!(k > 0.0) || !(t > 0.0)) return -std::numeric_limits<double>::infinity();
    return p * std::log(k) + std::log(t) - log_target;
}

} // namespace detail

/// Power-case route: solves K(t)^{2/(1-q)} t = Phi(u_1) for t in I, where u_1
/// is the lam = 1 frozen solution, and rescales u = K(t)^{-1/(1-q)} u_1.
/// `base` may supply u_1 to share it across branches.
inline KirchhoffSolution solve_t_equation(const DiscreteLaplacian& op, const Coefficient& coeff,
                                          const Nonlinearity& nl, const KirchhoffBranch& branch,
                                          const FixpointOptions& opts = {}, const SublinearSolution* base = nullptr) {
    detail::require(nl.is_power(), ErrorCode::InvalidArgument, "the t-equation route requires f(xi) = xi^q");
    const double q = nl.exponent();
    const double p = 2.0 / (1.0 - q);

    KirchhoffSolution sol;
    sol.branch = branch;
    sol.route = Route::TEquation;

    SublinearSolution owned;
    if (base == nullptr) {
        FrozenOptions fo = opts.frozen;
        fo.seed = nullptr;
        owned = solve_frozen(op, coeff, nl, 1.0, fo);
        sol.inner_solves = 1;
        base = &owned;
    }
    detail::require(base->lambda == 1.0, ErrorCode::InvalidArgument, "t-equation base must be the lam = 1 solution");
    const double t1 = base->phi;
    sol.phi_u1 = t1;
    const double log_t1 = std::log(t1);
    auto h = [&](double t) { return detail::log_t_equation(branch, p, log_t1, t); };

    const double lower = branch.lower();
    const double upper = branch.upper();
    double lo = lower;
    double hi = upper;
    if (opts.t_bracket) {
        lo = std::max(lower, opts.t_bracket->first);
        hi = std::min(upper, opts.t_bracket->second);
        detail::require(lo < hi, ErrorCode::InvalidArgument, "t bracket does not intersect the branch");
        // widen toward the ends of I until the root is enclosed
        for (int it = 0; it < 4096 && lo > lower && h(lo) >= 0.0; ++it) {
            lo = lower + 0.5 * (lo - lower);
            if (lo - lower <= std::numeric_limits<double>::min()) lo = lower;
        }
        if (std::isfinite(upper)) {
            for (int it = 0; it < 4096 && hi < upper && h(hi) <= 0.0; ++it) {
                const double next = upper - 0.5 * (upper - hi);
                hi = next <= hi ? upper : next;
            }
        }
    }
    if (!std::isfinite(hi)) hi = std::max(lo, 0.0) + 1.0;
    if (std::isinf(upper)) {
        for (int it = 0; it < 2100 && h(hi) <= 0.0; ++it) {
            hi = lo + 2.0 * (hi - lo);
            if (!std::isfinite(hi)) break;
        }
        if (!std::isfinite(hi)) {
            detail::fail(ErrorCode::NoCrossing, detail::no_crossing_message(branch, "K(t)^p t stays below Phi(u_1)"));
        }
    }
    const double h_lo = h(lo);
    const double h_hi = h(hi);
    if (!(h_lo < 0.0)) {
        detail::fail(ErrorCode::NoCrossing,
                     detail::no_crossing_message(branch, "K(t)^p t exceeds Phi(u_1) already at the lower end"));
    }
    if (!(h_hi > 0.0)) {
        detail::fail(ErrorCode::NoCrossing,
                     detail::no_crossing_message(branch, "K(t)^p t stays below Phi(u_1) on the whole branch"));
    }
    for (int it = 0; it < 4096; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (h(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    double t = std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
    if (!branch.contains(t)) t = branch.contains(lo) ? lo : hi;
    const double lam = branch.value(t);
    if (!(lam >= opts.lam_min && lam <= opts.lam_max)) {
        std::ostringstream os;
        os.precision(12);
        os << "the root t = " << t << " gives lam = K(t) = " << lam << " outside the admissible window ["
           << opts.lam_min << ", " << opts.lam_max << "]";
        detail::fail(ErrorCode::NoCrossing, detail::no_crossing_message(branch, os.str()));
    }

    const double factor = std::pow(lam, -1.0 / (1.0 - q));
    sol.u = base->u;
    for (double& v : sol.u.values) v *= factor;
    sol.t_tilde = dirichlet_energy(op, sol.u);
    detail::finalize_solution(sol, op, coeff, nl, opts);
    return sol;
}

/// Samples of phi(x, lam) around a computed saddle point. Rows are trial
/// functions (row 0 is u itself), columns are lam samples.
struct SaddleProbe {
    std::vector<double> lam_samples;
    std::size_t center_column = 0;
    std::vector<GridFunction> u_samples;
    std::vector<std::vector<double>> phi_values;
    double phi_center = 0.0;
    double eps = 0.0;
    double worst_lambda_margin = 0.0;   // min_j phi(u, lam~) - phi(u, lam_j)
    double worst_function_margin = 0.0; // min_i phi(v_i, lam~) - phi(u, lam~)
    std::size_t worst_lambda_index = 0;
    std::size_t worst_function_index = 0;
    std::uint64_t seed = 0;

    bool ok() const { return worst_lambda_margin >= -eps && worst_function_margin >= -eps; }
};

struct SaddleOptions {
    int lam_samples = 21;
    int perturbations = 50;
    double lam_span = 4.0;          // samples in [lam/span, lam*span]
    double perturbation_size = 1e-2; // relative to max u
    std::uint64_t seed = 20240601;
    double eps_rel = 1e-7;
};

namespace detail {

/// Piecewise-linear interpolant of random knot values on a coarse lattice.
inline GridFunction random_coarse_function(const DiscreteLaplacian& op, Rng& rng, double amplitude, bool signed_values,
                                           int knots = 6) {
    const auto& spec = op.spec();
    const int ky = spec.kind == DomainKind::Rectangle ? knots : 1;
    std::vector<double> values(static_cast<std::size_t>((knots + 2) * (ky + 2)), 0.0);
    for (int j = 1; j <= ky; ++j) {
        for (int i = 1; i <= knots; ++i) {
            const double r = signed_values ? rng.uniform(-1.0, 1.0) : rng.uniform();
            values[static_cast<std::size_t>(j * (knots + 2) + i)] = amplitude * r;
        }
    }
    return op.sample([&](double x, double y) {
        const double sx = x / spec.lengths[0] * (knots + 1);
        const int ix = std::min(knots, static_cast<int>(sx));
        const double wx = sx - ix;
        if (spec.kind == DomainKind::Interval) {
            return (1 - wx) * values[static_cast<std::size_t>(knots + 2 + ix)] +
                   wx * values[static_cast<std::size_t>(knots + 2 + ix + 1)];
        }
        const double sy = y / spec.lengths[1] * (ky + 1);
        const int iy = std::min(ky, static_cast<int>(sy));
        const double wy = sy - iy;
        auto at = [&](int a, int b) { return values[static_cast<std::size_t>(b * (knots + 2) + a)]; };
        return (1 - wx) * (1 - wy) * at(ix, iy) + wx * (1 - wy) * at(ix + 1, iy) + (1 - wx) * wy * at(ix, iy + 1) +
               wx * wy * at(ix + 1, iy + 1);
    });
}

} // namespace detail

/// Checks that (u, lam) is a saddle of phi: phi(u, .) peaks at lam and
/// phi(., lam) bottoms out at u, within eps = eps_rel (1 + |phi(u, lam)|).
/// Throws SaddleViolation naming the worst offender.
inline SaddleProbe saddle_probe(const KirchhoffSolution& sol, const DiscreteLaplacian& op, const Coefficient& coeff,
                                const Nonlinearity& nl, const SaddleOptions& opts = {}) {
    detail::require(opts.lam_samples >= 1 && opts.perturbations >= 0, ErrorCode::InvalidArgument,
                    "invalid saddle probe sizes");
    const auto& branch = sol.branch;
    SaddleProbe probe;
    probe.seed = opts.seed;
    const int n_lam = opts.lam_samples;
    const int half = (n_lam - 1) / 2;
    for (int j = 0; j < n_lam; ++j) {
        if (j == half) {
            probe.lam_samples.push_back(sol.lam_tilde);
        } else {
            const double e = n_lam == 1 ? 0.0 : -1.0 + 2.0 * j / (n_lam - 1);
            probe.lam_samples.push_back(sol.lam_tilde * std::pow(opts.lam_span, e));
        }
    }
    probe.center_column = static_cast<std::size_t>(half);

    Rng rng(opts.seed);
    const double umax = sol.u.max();
    probe.u_samples.push_back(sol.u);
    for (int i = 0; i < opts.perturbations; ++i) {
        auto dv = detail::random_coarse_function(op, rng, opts.perturbation_size * umax, true);
        for (std::size_t k = 0; k < dv.size(); ++k) dv[k] += sol.u[k];
        probe.u_samples.push_back(std::move(dv));
    }
    for (int i = 0; i < opts.perturbations; ++i) {
        const bool signed_values = (i % 2) == 1;
        probe.u_samples.push_back(detail::random_coarse_function(op, rng, 2.0 * umax, signed_values));
    }

    std::vector<double> q_values;
    for (double lam : probe.lam_samples) q_values.push_back(psi_inverse_integral(branch, lam));
    for (const auto& v : probe.u_samples) {
        const double phi = dirichlet_energy(op, v);
        const double j = functional_J(op, coeff, nl, v);
        std::vector<double> row;
        for (std::size_t c = 0; c < probe.lam_samples.size(); ++c) row.push_back(probe.lam_samples[c] * phi - j - q_values[c]);
        probe.phi_values.push_back(std::move(row));
    }
    probe.phi_center = probe.phi_values[0][probe.center_column];
    probe.eps = opts.eps_rel * (1.0 + std::abs(probe.phi_center));

    probe.worst_lambda_margin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < probe.lam_samples.size(); ++c) {
        if (c == probe.center_column) continue;
        const double margin = probe.phi_center - probe.phi_values[0][c];
        if (margin < probe.worst_lambda_margin) {
            probe.worst_lambda_margin = margin;
            probe.worst_lambda_index = c;
        }
    }
    probe.worst_function_margin = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r < probe.u_samples.size(); ++r) {
        const double margin = probe.phi_values[r][probe.center_column] - probe.phi_center;
        if (margin < probe.worst_function_margin) {
            probe.worst_function_margin = margin;
            probe.worst_function_index = r;
        }
    }
    if (!probe.ok()) {
        std::ostringstream os;
        os.precision(12);
        if (probe.worst_lambda_margin < -probe.eps) {
            os << "phi(u, lam) exceeds phi(u, lam~) at lam = " << probe.lam_samples[probe.worst_lambda_index]
               << " by " << -probe.worst_lambda_margin << "; ";
        }
        if (probe.worst_function_margin < -probe.eps) {
            os << "trial function #" << probe.worst_function_index << " lowers phi(., lam~) by "
               << -probe.worst_function_margin << "; ";
        }
        os << "eps = " << probe.eps;
        detail::fail(ErrorCode::SaddleViolation, os.str());
    }
    return probe;
}

} // namespace kirchhoff
