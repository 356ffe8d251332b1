#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/grid.hpp"

namespace kirchhoff {

/// f(xi) = xi^q with 0 < q < 1.
struct PowerReaction {
    double q = 0.5;
};

/// f given by samples on [0, xi_max], linearly interpolated and held constant
/// beyond xi_max. `primitive` optionally supplies F at the same abscissae.
struct TableReaction {
    std::vector<double> xi;
    std::vector<double> f;
    std::vector<double> primitive;
};

/// Sublinear reaction term f, extended by f = 0 on the negative axis, with its
/// primitive F(xi) = int_0^xi f.
class Nonlinearity {
public:
    static Nonlinearity power(double q) {
        detail::require(q > 0.0 && q < 1.0, ErrorCode::InvalidArgument, "power nonlinearity needs q in (0,1)");
        return Nonlinearity(PowerReaction{q});
    }

    static Nonlinearity table(std::vector<double> xi, std::vector<double> f, std::vector<double> primitive = {}) {
        detail::require(xi.size() == f.size() && xi.size() >= 2, ErrorCode::InvalidArgument,
                        "nonlinearity table needs at least two (xi, f) rows");
        detail::require(primitive.empty() || primitive.size() == xi.size(), ErrorCode::InvalidArgument,
                        "primitive column must match the table length");
        for (std::size_t i = 0; i < xi.size(); ++i) {
            detail::require(std::isfinite(xi[i]) && std::isfinite(f[i]), ErrorCode::InvalidArgument,
                            "nonlinearity table entries must be finite");
            if (i > 0) {
                detail::require(xi[i] > xi[i - 1], ErrorCode::InvalidArgument,
                                "nonlinearity table abscissae must be strictly increasing");
            }
        }
        detail::require(xi.front() >= 0.0, ErrorCode::InvalidArgument, "nonlinearity table must start at xi >= 0");
        if (xi.front() > 0.0) {
            xi.insert(xi.begin(), 0.0);
            f.insert(f.begin(), 0.0);
            if (!primitive.empty()) primitive.insert(primitive.begin(), 0.0);
        }
        TableReaction table{std::move(xi), std::move(f), std::move(primitive)};
        if (table.primitive.empty()) {
            // exact primitive of the piecewise-linear interpolant
            table.primitive.assign(table.xi.size(), 0.0);
            for (std::size_t i = 1; i < table.xi.size(); ++i) {
                table.primitive[i] =
                    table.primitive[i - 1] + 0.5 * (table.f[i] + table.f[i - 1]) * (table.xi[i] - table.xi[i - 1]);
            }
        }
        return Nonlinearity(std::move(table));
    }

    bool is_power() const { return std::holds_alternative<PowerReaction>(reaction_); }

    double exponent() const {
        detail::require(is_power(), ErrorCode::InvalidArgument, "exponent requested for a non-power nonlinearity");
        return std::get<PowerReaction>(reaction_).q;
    }

    const std::variant<PowerReaction, TableReaction>& reaction() const { return reaction_; }

    double f(double xi) const {
        if (!(xi > 0.0)) return 0.0;
        if (const auto* p = std::get_if<PowerReaction>(&reaction_)) return std::pow(xi, p->q);
        const auto& t = std::get<TableReaction>(reaction_);
        if (xi >= t.xi.back()) return t.f.back();
        const std::size_t j = segment(t.xi, xi);
        const double w = (xi - t.xi[j - 1]) / (t.xi[j] - t.xi[j - 1]);
        return (1.0 - w) * t.f[j - 1] + w * t.f[j];
    }

    double F(double xi) const {
        if (!(xi > 0.0)) return 0.0;
        if (const auto* p = std::get_if<PowerReaction>(&reaction_)) return std::pow(xi, p->q + 1.0) / (p->q + 1.0);
        const auto& t = std::get<TableReaction>(reaction_);
        if (xi >= t.xi.back()) return t.primitive.back() + t.f.back() * (xi - t.xi.back());
        const std::size_t j = segment(t.xi, xi);
        const double dx = xi - t.xi[j - 1];
        const double slope = (t.f[j] - t.f[j - 1]) / (t.xi[j] - t.xi[j - 1]);
        return t.primitive[j - 1] + t.f[j - 1] * dx + 0.5 * slope * dx * dx;
    }

    std::string name() const {
        std::ostringstream os;
        if (const auto* p = std::get_if<PowerReaction>(&reaction_)) os << "power:" << p->q;
        else os << "table[" << std::get<TableReaction>(reaction_).xi.size() << "]";
        return os.str();
    }

private:
    explicit Nonlinearity(std::variant<PowerReaction, TableReaction> r) : reaction_(std::move(r)) {}

    static std::size_t segment(const std::vector<double>& xs, double x) {
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - xs.begin()));
    }

    std::variant<PowerReaction, TableReaction> reaction_;
};

struct NonlinearityReport {
    bool sign_ok = false;              // f >= 0 on the grid, f(0) = 0
    bool quotient_decreasing_ok = false;
    bool nondecreasing_ok = false;
    bool blowup_at_zero_ok = false;    // f(xi)/xi -> +inf as xi -> 0+
    bool vanishing_at_infinity_ok = false;
    double low_end_slope = 0.0;        // d log(f/xi) / d log xi at the low end
    double high_end_slope = 0.0;
    int grid_points = 0;
    std::string notes;

    bool ok() const {
        return sign_ok && quotient_decreasing_ok && nondecreasing_ok && blowup_at_zero_ok && vanishing_at_infinity_ok;
    }
};

/// Finite-grid rendering of the sublinearity hypotheses on a log-spaced grid.
/// The endpoint trends are accepted when the log-log slope of f(xi)/xi at
/// each end is at most `trend_slope` (negative).
inline NonlinearityReport validate_nonlinearity(const Nonlinearity& nl, int grid_points = 64,
                                                double trend_slope = -1e-3) {
    detail::require(grid_points >= 32, ErrorCode::InvalidArgument, "validate_nonlinearity needs at least 32 points");
    double lo = 1e-8;
    double hi = 1e8;
    bool zero_ok = true;
    if (const auto* t = std::get_if<TableReaction>(&nl.reaction())) {
        lo = t->xi[1];
        hi = t->xi.back();
        zero_ok = t->f.front() == 0.0;
    }
    NonlinearityReport r;
    r.grid_points = grid_points;
    std::vector<double> xs(static_cast<std::size_t>(grid_points));
    for (int j = 0; j < grid_points; ++j) {
        xs[static_cast<std::size_t>(j)] = lo * std::pow(hi / lo, static_cast<double>(j) / (grid_points - 1));
    }
    std::vector<double> fs, qs;
    for (double x : xs) {
        fs.push_back(nl.f(x));
        qs.push_back(fs.back() / x);
    }
    r.sign_ok = zero_ok && nl.f(0.0) == 0.0 && nl.f(-1.0) == 0.0 &&
                std::all_of(fs.begin(), fs.end(), [](double v) { return std::isfinite(v) && v >= 0.0; });
    r.quotient_decreasing_ok = true;
    r.nondecreasing_ok = true;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(qs[i] < qs[i - 1])) r.quotient_decreasing_ok = false;
        if (fs[i] < fs[i - 1]) r.nondecreasing_ok = false;
    }
    auto slope = [&](std::size_t i, std::size_t j) {
        if (!(qs[i] > 0.0 && qs[j] > 0.0)) return 0.0;
        return (std::log(qs[j]) - std::log(qs[i])) / (std::log(xs[j]) - std::log(xs[i]));
    };
    const std::size_t n = xs.size();
    r.low_end_slope = slope(0, 1);
    r.high_end_slope = slope(n - 2, n - 1);
    r.blowup_at_zero_ok = r.low_end_slope <= trend_slope;
    r.vanishing_at_infinity_ok = r.high_end_slope <= trend_slope;
    if (!r.sign_ok) detail::append_note(r.notes, "f must vanish at 0 and be nonnegative");
    if (!r.quotient_decreasing_ok) detail::append_note(r.notes, "f(xi)/xi is not strictly decreasing");
    if (!r.nondecreasing_ok) detail::append_note(r.notes, "f is not nondecreasing");
    if (!r.blowup_at_zero_ok) detail::append_note(r.notes, "f(xi)/xi does not blow up as xi -> 0+");
    if (!r.vanishing_at_infinity_ok) detail::append_note(r.notes, "f(xi)/xi does not vanish as xi -> +inf");
    return r;
}

/// Nodal values of a strictly positive coefficient alpha, with the discrete
/// ess sup and integral.
struct Coefficient {
    GridFunction alpha;
    double ess_sup = 0.0;
    double integral = 0.0;

    static Coefficient from_values(const DiscreteLaplacian& op, GridFunction alpha) {
        op.check_size(alpha.size());
        Coefficient c;
        c.ess_sup = alpha.max();
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            detail::require(std::isfinite(alpha[i]) && alpha[i] > 0.0, ErrorCode::InvalidArgument,
                            "coefficient alpha must be strictly positive at every node");
            c.integral += op.mass(i) * alpha[i];
        }
        c.alpha = std::move(alpha);
        return c;
    }

    static Coefficient constant(const DiscreteLaplacian& op, double value) {
        return from_values(op, GridFunction(op.spec(), value));
    }

    /// alpha(x, y) = base + slope * x
    static Coefficient linear_ramp(const DiscreteLaplacian& op, double base, double slope) {
        return from_values(op, op.sample([=](double x, double) { return base + slope * x; }));
    }

    /// Alternating values `low`/`high` on a cells x cells partition of the domain.
    static Coefficient checkerboard(const DiscreteLaplacian& op, double low, double high, int cells) {
        detail::require(cells >= 1, ErrorCode::InvalidArgument, "checkerboard needs at least one cell per axis");
        const auto& spec = op.spec();
        return from_values(op, op.sample([&](double x, double y) {
            const int cx = std::min(cells - 1, static_cast<int>(x / spec.lengths[0] * cells));
            int cy = 0;
            if (spec.kind == DomainKind::Rectangle) cy = std::min(cells - 1, static_cast<int>(y / spec.lengths[1] * cells));
            return (cx + cy) % 2 == 0 ? low : high;
        }));
    }
};

/// J(u) = 2 sum_i M_ii alpha_i F(max(u_i, 0)).
inline double functional_J(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                           const GridFunction& u) {
    op.check_size(u.size());
    op.check_size(coeff.alpha.size());
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += op.mass(i) * coeff.alpha[i] * nl.F(std::max(u[i], 0.0));
    return 2.0 * s;
}

/// lam * Phi(u) - J(u).
inline double frozen_energy(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl, double lam,
                            const GridFunction& u) {
    detail::require(lam > 0.0, ErrorCode::InvalidArgument, "frozen energy needs lam > 0");
    return lam * dirichlet_energy(op, u) - functional_J(op, coeff, nl, u);
}

/// M (alpha . f(u)), the discrete reaction load.
inline std::vector<double> reaction_load(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                         const GridFunction& u) {
    op.check_size(u.size());
    std::vector<double> load(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) load[i] = op.mass(i) * coeff.alpha[i] * nl.f(u[i]);
    return load;
}

/// ||lam A u - M(alpha . f(u))|| / ||M(alpha . f(u))||.
inline double frozen_residual(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl, double lam,
                              const GridFunction& u) {
    const auto load = reaction_load(op, coeff, nl, u);
    const auto au = op.apply(u.view());
    double num = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = lam * au[i] - load[i];
        num += d * d;
    }
    const double den = detail::norm2(load);
    return den > 0.0 ? std::sqrt(num) / den : std::numeric_limits<double>::infinity();
}

struct SublinearSolution {
    GridFunction u;
    double lambda = 0.0;
    double phi = 0.0;
    double energy = 0.0;
    int iterations = 0;
    double residual = 0.0;
    int linear_iterations = 0;
};

struct FrozenOptions {
    double tol = 1e-10;            // successive iterates, relative max norm
    double linear_tol = kDefaultLinearTol;
    double residual_tol = 1e-8;
    int max_iterations = 10000;
    double positivity_floor = 1e-14;
    /// Multiplies the constructed supersolution (values >= 1 keep it a supersolution).
    double start_scale = 1.0;
    /// Optional supersolution used instead of the constructed one.
    const GridFunction* seed = nullptr;
    /// Called with (iteration, iterate) for every iterate including the start.
    std::function<void(int, const GridFunction&)> observer;
};

/// Supersolution (f(C)/lam) w with w = A^{-1} M alpha, where C satisfies
/// f(C) max w <= lam C. For f = xi^q this is C = (max w / lam)^{1/(1-q)}.
inline GridFunction frozen_supersolution(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                         double lam, double linear_tol = kDefaultLinearTol) {
    detail::require(lam > 0.0, ErrorCode::InvalidArgument, "supersolution needs lam > 0");
    auto w = solve_spd(op, coeff.alpha, linear_tol);
    const double wmax = w.max();
    double c = 0.0;
    if (nl.is_power()) {
        c = std::pow(wmax / lam, 1.0 / (1.0 - nl.exponent()));
    } else {
        c = 1.0;
        int guard = 0;
        while (nl.f(c) * wmax > lam * c) {
            c *= 2.0;
            detail::require(++guard < 2000, ErrorCode::NoConvergence, "no supersolution level found");
        }
        while (c > 1e-300 && nl.f(0.5 * c) * wmax <= lam * 0.5 * c && nl.f(0.5 * c) > 0.0) c *= 0.5;
    }
    const double scale = nl.f(c) / lam;
    for (double& v : w.values) v *= scale;
    return w;
}

/// Unique positive solution of lam A u = M(alpha . f(u)) by monotone iteration
/// u_{k+1} = A^{-1} M(alpha . f(u_k)) / lam from a supersolution.
inline SublinearSolution solve_frozen(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                      double lam, const FrozenOptions& opts = {}) {
    detail::require(lam > 0.0 && std::isfinite(lam), ErrorCode::InvalidArgument, "solve_frozen needs lam > 0");
    detail::require(opts.tol > 0.0, ErrorCode::InvalidArgument, "solve_frozen needs tol > 0");
    op.check_size(coeff.alpha.size());

    GridFunction u = opts.seed != nullptr ? *opts.seed : frozen_supersolution(op, coeff, nl, lam, opts.linear_tol);
    op.check_size(u.size());
    if (opts.start_scale != 1.0) {
        for (double& v : u.values) v *= opts.start_scale;
    }
    const double start_max = u.max();
    detail::require(start_max > 0.0, ErrorCode::InvalidArgument, "starting supersolution must be positive somewhere");
    if (opts.observer) opts.observer(0, u);

    SublinearSolution out;
    out.lambda = lam;
    std::vector<double> load(u.size());
    for (int it = 1; it <= opts.max_iterations; ++it) {
        for (std::size_t i = 0; i < u.size(); ++i) load[i] = op.mass(i) * coeff.alpha[i] * nl.f(u[i]) / lam;
        auto solve = solve_spd_system(op, load, opts.linear_tol, &u);
        out.linear_iterations += solve.iterations;
        GridFunction next = std::move(solve.solution);
        const double next_max = next.max();
        if (!(next_max >= opts.positivity_floor * start_max)) {
            std::ostringstream os;
            os << "monotone iteration collapsed below the positivity floor at iteration " << it << " (lam = " << lam
               << ")";
            detail::fail(ErrorCode::DegenerateLimit, os.str());
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) diff = std::max(diff, std::abs(next[i] - u[i]));
        u = std::move(next);
        if (opts.observer) opts.observer(it, u);
        if (diff <= opts.tol * next_max) {
            const double residual = frozen_residual(op, coeff, nl, lam, u);
            if (residual <= opts.residual_tol) {
                out.iterations = it;
                out.residual = residual;
                break;
            }
        }
        if (it == opts.max_iterations) {
            detail::fail(ErrorCode::NoConvergence, "monotone iteration did not converge in " +
                                                       std::to_string(opts.max_iterations) + " iterations");
        }
    }
    for (double v : u.values) {
        detail::require(v > 0.0, ErrorCode::DegenerateLimit, "frozen solution is not strictly positive");
    }
    out.phi = dirichlet_energy(op, u);
    out.energy = lam * out.phi - functional_J(op, coeff, nl, u);
    out.u = std::move(u);
    return out;
}

/// Exact rescaling of a solution for f = xi^q. From lam = 1:
/// u_lam = lam^{-1/(1-q)} u_1 and Phi(u_lam) = lam^{-2/(1-q)} Phi(u_1).
/// A base at another lam is rescaled by the ratio lam_new / base.lambda.
inline SublinearSolution scale_solution(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                        const SublinearSolution& base, double lam_new) {
    detail::require(nl.is_power(), ErrorCode::InvalidArgument, "scale_solution requires a power nonlinearity");
    detail::require(lam_new > 0.0, ErrorCode::InvalidArgument, "scale_solution needs lam > 0");
    const double q = nl.exponent();
    const double ratio = lam_new / base.lambda;
    const double factor = std::pow(ratio, -1.0 / (1.0 - q));
    SublinearSolution out = base;
    out.lambda = lam_new;
    for (double& v : out.u.values) v *= factor;
    out.phi = std::pow(ratio, -2.0 / (1.0 - q)) * base.phi;
    out.energy = lam_new * out.phi - functional_J(op, coeff, nl, out.u);
    out.residual = frozen_residual(op, coeff, nl, lam_new, out.u);
    return out;
}

} // namespace kirchhoff
