#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/quadrature.hpp"

namespace kirchhoff {

/// K(t) = tan t on ((k-1)pi, (k-1)pi + pi/2).
struct TanFamily {
    int k = 1;
};

/// K(t) = log t on (1, +inf).
struct LogFamily {};

/// K(t) = |c - t|^{-s} on (0, c). Its range over the branch is (c^{-s}, +inf).
struct SingularPowerFamily {
    double c = 1.0;
    double s = 0.5;
};

/// K(t) = a t + b on (0, +inf).
struct AffineFamily {
    double a = 1.0;
    double b = 0.0;
};

/// Strictly increasing sample table (t_i, K_i) with linear interpolation on
/// the open interval (t_0, t_n).
struct TableFamily {
    std::vector<double> t;
    std::vector<double> k;
};

using BranchFamily = std::variant<TanFamily, LogFamily, SingularPowerFamily, AffineFamily, TableFamily>;

/// A Kirchhoff function restricted to an open interval I on which it is
/// increasing and positive.
class KirchhoffBranch {
public:
    static KirchhoffBranch tan(int k) {
        detail::require(k >= 1, ErrorCode::InvalidArgument, "tan branch index must be a positive integer");
        return KirchhoffBranch(TanFamily{k});
    }

    static KirchhoffBranch log() { return KirchhoffBranch(LogFamily{}); }

    static KirchhoffBranch singular_power(double c, double s) {
        detail::require(c > 0.0 && std::isfinite(c), ErrorCode::InvalidArgument, "singular branch needs c > 0");
        detail::require(s > 0.0 && s < 1.0, ErrorCode::InvalidArgument, "singular branch needs s in (0,1)");
        return KirchhoffBranch(SingularPowerFamily{c, s});
    }

    static KirchhoffBranch affine(double a, double b) {
        detail::require(a >= 0.0 && b >= 0.0 && (a > 0.0 || b > 0.0), ErrorCode::InvalidArgument,
                        "affine branch needs a >= 0, b >= 0, not both zero");
        return KirchhoffBranch(AffineFamily{a, b});
    }

    static KirchhoffBranch table(std::vector<double> t, std::vector<double> k) {
        detail::require(t.size() == k.size() && t.size() >= 2, ErrorCode::InvalidArgument,
                        "branch table needs at least two (t, K) rows");
        for (std::size_t i = 0; i < t.size(); ++i) {
            detail::require(std::isfinite(t[i]) && std::isfinite(k[i]), ErrorCode::InvalidArgument,
                            "branch table entries must be finite");
            if (i > 0) {
                detail::require(t[i] > t[i - 1], ErrorCode::InvalidArgument,
                                "branch table abscissae must be strictly increasing");
            }
        }
        detail::require(t.front() >= 0.0, ErrorCode::InvalidArgument, "branch table must lie in [0, +inf)");
        return KirchhoffBranch(TableFamily{std::move(t), std::move(k)});
    }

    const BranchFamily& family() const { return family_; }

    double lower() const {
        return std::visit(
            [](const auto& f) -> double {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, TanFamily>) return (f.k - 1) * M_PI;
                else if constexpr (std::is_same_v<F, LogFamily>) return 1.0;
                else if constexpr (std::is_same_v<F, TableFamily>) return f.t.front();
                else return 0.0;
            },
            family_);
    }

    double upper() const {
        return std::visit(
            [](const auto& f) -> double {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, TanFamily>) return (f.k - 1) * M_PI + M_PI / 2.0;
                else if constexpr (std::is_same_v<F, SingularPowerFamily>) return f.c;
                else if constexpr (std::is_same_v<F, TableFamily>) return f.t.back();
                else return std::numeric_limits<double>::infinity();
            },
            family_);
    }

    bool contains(double t) const { return t > lower() && t < upper(); }

    /// Infimum of K over I.
    double range_low() const {
        return std::visit(
            [](const auto& f) -> double {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, SingularPowerFamily>) return std::pow(f.c, -f.s);
                else if constexpr (std::is_same_v<F, AffineFamily>) return f.b;
                else if constexpr (std::is_same_v<F, TableFamily>) return f.k.front();
                else return 0.0;
            },
            family_);
    }

    /// Supremum of K over I.
    double range_high() const {
        return std::visit(
            [](const auto& f) -> double {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, TableFamily>) return f.k.back();
                else if constexpr (std::is_same_v<F, AffineFamily>)
                    return f.a > 0.0 ? std::numeric_limits<double>::infinity() : f.b;
                else return std::numeric_limits<double>::infinity();
            },
            family_);
    }

    /// Whether K(I) = (0, +inf) holds for this family.
    bool range_full() const { return range_low() == 0.0 && std::isinf(range_high()); }

    /// K evaluated without the branch check; defined on the closure of I
    /// where the closed form makes sense.
    double value(double t) const {
        return std::visit(
            [t](const auto& f) -> double {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, TanFamily>) return std::tan(t);
                else if constexpr (std::is_same_v<F, LogFamily>) return std::log(t);
                else if constexpr (std::is_same_v<F, SingularPowerFamily>) return std::pow(std::abs(f.c - t), -f.s);
                else if constexpr (std::is_same_v<F, AffineFamily>) return f.a * t + f.b;
                else {
                    if (t <= f.t.front()) return f.k.front();
                    if (t >= f.t.back()) return f.k.back();
                    const auto it = std::upper_bound(f.t.begin(), f.t.end(), t);
                    const std::size_t j = static_cast<std::size_t>(it - f.t.begin());
                    const double w = (t - f.t[j - 1]) / (f.t[j] - f.t[j - 1]);
                    return (1.0 - w) * f.k[j - 1] + w * f.k[j];
                }
            },
            family_);
    }

    bool is_closed_form() const { return !std::holds_alternative<TableFamily>(family_); }

    /// Short identifier, e.g. "tan:2", "singular:1:0.5".
    std::string name() const {
        std::ostringstream os;
        os.precision(12);
        std::visit(
            [&os](const auto& f) {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, TanFamily>) os << "tan:" << f.k;
                else if constexpr (std::is_same_v<F, LogFamily>) os << "log";
                else if constexpr (std::is_same_v<F, SingularPowerFamily>) os << "singular:" << f.c << ':' << f.s;
                else if constexpr (std::is_same_v<F, AffineFamily>) os << "affine:" << f.a << ':' << f.b;
                else os << "table[" << f.t.size() << "]";
            },
            family_);
        return os.str();
    }

private:
    explicit KirchhoffBranch(BranchFamily family) : family_(std::move(family)) {}

    BranchFamily family_;
};

/// K(t) for t in the open branch interval.
inline double eval_K(const KirchhoffBranch& branch, double t) {
    if (!branch.contains(t)) {
        std::ostringstream os;
        os.precision(17);
        os << "t = " << t << " lies outside the branch (" << branch.lower() << ", " << branch.upper() << ") of "
           << branch.name();
        detail::fail(ErrorCode::OutOfBranch, os.str());
    }
    return branch.value(t);
}

namespace detail {

/// K stays below lam on every finite double of an unbounded branch.
inline bool beyond_double_range(const KirchhoffBranch& branch, double lam) {
    return !std::isfinite(branch.upper()) && branch.value(std::numeric_limits<double>::max()) < lam;
}

/// Finite upper end of a bracket [lower, hi] with K(hi) >= lam.
inline double expand_upper(const KirchhoffBranch& branch, double lam) {
    const double lo = branch.lower();
    if (std::isfinite(branch.upper())) return branch.upper();
    double step = 1.0;
    double hi = lo + step;
    while (branch.value(hi) < lam) {
        step *= 2.0;
        hi = lo + step;
        require(std::isfinite(hi), ErrorCode::NoConvergence, "could not bracket the inverse of K");
    }
    return hi;
}

/// Bisection for K(t) = lam on [lo, hi], carried to machine resolution.
inline double bisect_inverse(const KirchhoffBranch& branch, double lam, double lo, double hi) {
    for (int it = 0; it < 4096; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (branch.value(mid) < lam) lo = mid;
        else hi = mid;
    }
    return std::abs(branch.value(lo) - lam) <= std::abs(branch.value(hi) - lam) ? lo : hi;
}

} // namespace detail

inline constexpr double kClosedFormInverseTol = 1e-12;
inline constexpr double kTableInverseTol = 1e-10;

/// Inverse of K on the branch with psi_inverse(0) = inf I. `tol` is the
/// accepted mismatch: either |K(t) - lam| <= tol * max(1, lam) or a bracket
/// no wider than tol * max(1, |t|). Zero selects the family default.
inline double psi_inverse(const KirchhoffBranch& branch, double lam, double tol = 0.0) {
    detail::require(lam >= 0.0 && std::isfinite(lam), ErrorCode::InvalidArgument,
                    "psi_inverse needs a finite lam >= 0");
    if (tol <= 0.0) tol = branch.is_closed_form() ? kClosedFormInverseTol : kTableInverseTol;
    if (lam == 0.0) return branch.lower();
    if (!(lam > branch.range_low() && lam < branch.range_high())) {
        std::ostringstream os;
        os.precision(17);
        os << "lam = " << lam << " is not attained on " << branch.name() << ", whose range is (" << branch.range_low()
           << ", " << branch.range_high() << ")";
        detail::fail(ErrorCode::OutOfRange, os.str());
    }
    if (detail::beyond_double_range(branch, lam)) {
        std::ostringstream os;
        os.precision(17);
        os << "psi_inverse(" << lam << ") on " << branch.name() << " exceeds the double range";
        detail::fail(ErrorCode::OutOfRange, os.str());
    }
    const double hi = detail::expand_upper(branch, lam);
    const double t = detail::bisect_inverse(branch, lam, branch.lower(), hi);
    const double mismatch = std::abs(branch.value(t) - lam);
    const double dt = std::max(std::nextafter(t, hi) - t, t - std::nextafter(t, branch.lower()));
    if (!(mismatch <= tol * std::max(1.0, lam) || dt <= tol * std::max(1.0, std::abs(t)))) {
        detail::fail(ErrorCode::NoConvergence, "bisection for psi_inverse did not meet tolerance");
    }
    return t;
}

/// Monotone extension of psi_inverse to all lam >= 0: inf I below the range of
/// K, sup I above it.
inline double psi_inverse_extended(const KirchhoffBranch& branch, double lam) {
    detail::require(lam >= 0.0, ErrorCode::InvalidArgument, "psi_inverse_extended needs lam >= 0");
    if (lam <= branch.range_low()) return branch.lower();
    if (lam >= branch.range_high() || detail::beyond_double_range(branch, lam)) return branch.upper();
    return psi_inverse(branch, lam);
}

/// Q(lam) = integral of psi_inverse_extended over [0, lam]. Closed forms for
/// the tan, log and affine families; adaptive Simpson otherwise.
inline double psi_inverse_integral(const KirchhoffBranch& branch, double lam, double rel_tol = 1e-8) {
    detail::require(lam >= 0.0 && std::isfinite(lam), ErrorCode::InvalidArgument,
                    "psi_inverse_integral needs a finite lam >= 0");
    if (lam == 0.0) return 0.0;
    if (const auto* tan = std::get_if<TanFamily>(&branch.family())) {
        return (tan->k - 1) * M_PI * lam + lam * std::atan(lam) - 0.5 * std::log1p(lam * lam);
    }
    if (std::holds_alternative<LogFamily>(branch.family())) return std::expm1(lam);
    if (const auto* aff = std::get_if<AffineFamily>(&branch.family()); aff != nullptr && aff->a > 0.0) {
        return lam <= aff->b ? 0.0 : (lam - aff->b) * (lam - aff->b) / (2.0 * aff->a);
    }

    // Piecewise: constant inf I up to the bottom of the range, then the
    // smooth inverse, split at table knots and capped at sup I.
    std::vector<double> breaks{0.0};
    const double low = branch.range_low();
    const double high = branch.range_high();
    if (low > 0.0 && low < lam) breaks.push_back(low);
    if (const auto* table = std::get_if<TableFamily>(&branch.family())) {
        for (double k : table->k) {
            if (k > breaks.back() && k < lam) breaks.push_back(k);
        }
    }
    if (high < lam && high > breaks.back()) breaks.push_back(high);
    breaks.push_back(lam);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = breaks[i + 1];
        if (b <= low) {
            total += branch.lower() * (b - a);
        } else if (a >= high) {
            total += branch.upper() * (b - a);
        } else {
            const auto inverse = [&branch, a, b](double x) {
                return psi_inverse_extended(branch, std::clamp(x, std::nextafter(a, b), std::nextafter(b, a)));
            };
            total += adaptive_simpson(inverse, a, b, rel_tol);
        }
    }
    return total;
}

struct BranchValidationReport {
    bool monotone_ok = false;
    bool positive_ok = false;
    double range_low = 0.0;
    double range_high = 0.0;
    bool range_high_unbounded = false;
    int samples = 0;
    std::string notes;

    /// Sampled infimum tends to zero and the sampled supremum is unbounded.
    bool range_full(double zero_threshold = 1e-6) const {
        return monotone_ok && positive_ok && range_low <= zero_threshold && range_high_unbounded;
    }

    bool ok() const { return monotone_ok && positive_ok; }
};

/// Samples K on a geometric-plus-uniform set of points in I and reports
/// strict monotonicity, positivity and the behavior near the endpoints.
inline BranchValidationReport validate_branch(const KirchhoffBranch& branch, int samples = 64,
                                              double unbounded_threshold = 1e6) {
    detail::require(samples >= 16, ErrorCode::InvalidArgument, "validate_branch needs at least 16 samples");
    const double lo = branch.lower();
    const double hi = branch.upper();
    std::vector<double> ts;
    const int geometric = samples / 2;
    const int uniform = samples - geometric;
    if (std::isfinite(hi)) {
        const double width = hi - lo;
        const int per_end = geometric / 2;
        for (int j = 0; j < per_end; ++j) {
            // offsets from 1e-12 * width up to 0.25 * width
            const double e = -12.0 + (12.0 + std::log10(0.25)) * j / std::max(1, per_end - 1);
            const double off = width * std::pow(10.0, e);
            ts.push_back(lo + off);
            ts.push_back(hi - off);
        }
        for (int j = 1; j <= uniform; ++j) ts.push_back(lo + width * j / (uniform + 1));
    } else {
        const double scale = std::max(1.0, std::abs(lo));
        for (int j = 0; j < geometric; ++j) {
            const double e = -12.0 + 27.0 * j / std::max(1, geometric - 1);
            ts.push_back(lo + scale * std::pow(10.0, e));
        }
        for (int j = 1; j <= uniform; ++j) ts.push_back(lo + 10.0 * scale * j / uniform);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    ts.erase(std::remove_if(ts.begin(), ts.end(), [&](double t) { return !branch.contains(t); }), ts.end());

    BranchValidationReport report;
    report.samples = static_cast<int>(ts.size());
    std::vector<double> ks;
    ks.reserve(ts.size());
    for (double t : ts) ks.push_back(branch.value(t));

    report.positive_ok = std::all_of(ks.begin(), ks.end(), [](double k) { return std::isfinite(k) && k > 0.0; });
    report.monotone_ok = true;
    for (std::size_t i = 1; i < ks.size(); ++i) {
        if (!(ks[i] > ks[i - 1])) {
            report.monotone_ok = false;
            std::ostringstream os;
            os.precision(12);
            os << "K not strictly increasing between t=" << ts[i - 1] << " and t=" << ts[i];
            detail::append_note(report.notes, os.str());
            break;
        }
    }
    if (!report.positive_ok) detail::append_note(report.notes, "K not positive on every sample");
    if (ks.empty()) {
        detail::append_note(report.notes, "no samples inside the branch");
        report.monotone_ok = report.positive_ok = false;
        return report;
    }
    report.range_low = *std::min_element(ks.begin(), ks.end());
    report.range_high = *std::max_element(ks.begin(), ks.end());
    report.range_high_unbounded = report.range_high > unbounded_threshold;
    if (!report.range_high_unbounded && !std::isfinite(hi) && ts.size() >= 4) {
        // Slow growth on an unbounded interval: accept when the increase per
        // decade is not decaying over the last decades sampled.
        auto at = [&](double t) { return branch.value(t); };
        const double top = ts.back();
        const double d1 = at(top) - at(lo + (top - lo) / 10.0);
        const double d2 = at(lo + (top - lo) / 10.0) - at(lo + (top - lo) / 100.0);
        const double d3 = at(lo + (top - lo) / 100.0) - at(lo + (top - lo) / 1000.0);
        report.range_high_unbounded = d1 > 0.0 && d2 > 0.0 && d1 >= 0.9 * d2 && d2 >= 0.9 * d3;
        if (report.range_high_unbounded) detail::append_note(report.notes, "unbounded growth inferred from per-decade increments");
    }
    return report;
}

} // namespace kirchhoff
