#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

enum class DomainKind { Interval, Rectangle };

/// Uniform structured discretization of (0,L) or (0,a)x(0,b) with homogeneous
/// Dirichlet data. `resolution` counts interior nodes per axis, so the mesh
/// width on an axis is length / (resolution + 1).
struct DomainSpec {
    DomainKind kind = DomainKind::Interval;
    std::array<double, 2> lengths{1.0, 0.0};
    std::array<int, 2> resolution{2, 0};

    static DomainSpec interval(double length, int nodes) {
        return DomainSpec{DomainKind::Interval, {length, 0.0}, {nodes, 0}};
    }

    static DomainSpec rectangle(double a, double b, int nx, int ny) {
        return DomainSpec{DomainKind::Rectangle, {a, b}, {nx, ny}};
    }

    static DomainSpec rectangle(double a, double b, int nodes) {
        return rectangle(a, b, nodes, nodes);
    }

    int dimension() const { return kind == DomainKind::Interval ? 1 : 2; }

    double mesh_width(int axis) const { return lengths[axis] / (resolution[axis] + 1); }

    std::size_t node_count() const {
        std::size_t n = static_cast<std::size_t>(resolution[0]);
        if (kind == DomainKind::Rectangle) n *= static_cast<std::size_t>(resolution[1]);
        return n;
    }

    void validate() const {
        for (int axis = 0; axis < dimension(); ++axis) {
            detail::require(std::isfinite(lengths[axis]) && lengths[axis] > 0.0, ErrorCode::InvalidDomain,
                            "domain lengths must be finite and strictly positive");
            detail::require(resolution[axis] >= 2, ErrorCode::InvalidDomain,
                            "resolution must be at least 2 interior nodes per axis, got " +
                                std::to_string(resolution[axis]));
            detail::require(mesh_width(axis) > 0.0, ErrorCode::InvalidDomain, "mesh width underflow");
        }
    }

    bool operator==(const DomainSpec&) const = default;
};

/// Nodal values on the interior nodes of a grid, in lexicographic order
/// (x index fastest). Boundary values are zero implicitly.
struct GridFunction {
    std::vector<double> values;
    DomainSpec spec;

    GridFunction() = default;
    GridFunction(const DomainSpec& s, double fill = 0.0) : values(s.node_count(), fill), spec(s) {}
    GridFunction(const DomainSpec& s, std::vector<double> v) : values(std::move(v)), spec(s) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> view() const { return values; }
    std::span<double> view() { return values; }

    double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
    double min() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
};

/// Stiffness A and lumped mass M of the Dirichlet Laplacian, scaled so that
/// u^T A u approximates the Dirichlet energy and M carries the nodal
/// quadrature weights. A is stored as its constant stencil and applied
/// matrix-free.
class DiscreteLaplacian {
public:
    explicit DiscreteLaplacian(const DomainSpec& spec) : spec_(spec) {
        spec_.validate();
        nx_ = spec_.resolution[0];
        ny_ = spec_.kind == DomainKind::Rectangle ? spec_.resolution[1] : 1;
        const double hx = spec_.mesh_width(0);
        if (spec_.kind == DomainKind::Interval) {
            weight_x_ = 1.0 / hx;
            weight_y_ = 0.0;
            mass_ = hx;
        } else {
            const double hy = spec_.mesh_width(1);
            weight_x_ = hy / hx;
            weight_y_ = hx / hy;
            mass_ = hx * hy;
        }
        diagonal_ = 2.0 * weight_x_ + 2.0 * weight_y_;
    }

    const DomainSpec& spec() const { return spec_; }
    std::size_t node_count() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
    int nx() const { return nx_; }
    int ny() const { return ny_; }

    double diagonal() const { return diagonal_; }
    double mass(std::size_t) const { return mass_; }
    double mass_weight() const { return mass_; }

    /// Entry A(i,j) of the assembled stiffness matrix.
    double stiffness(std::size_t i, std::size_t j) const {
        if (i == j) return diagonal_;
        const auto [ix, iy] = split(i);
        const auto [jx, jy] = split(j);
        if (iy == jy && (ix - jx == 1 || jx - ix == 1)) return -weight_x_;
        if (ix == jx && (iy - jy == 1 || jy - iy == 1)) return -weight_y_;
        return 0.0;
    }

    /// y = A x
    void apply(std::span<const double> x, std::span<double> y) const {
        check_size(x.size());
        check_size(y.size());
        for (int iy = 0; iy < ny_; ++iy) {
            for (int ix = 0; ix < nx_; ++ix) {
                const std::size_t k = index(ix, iy);
                double acc = diagonal_ * x[k];
                if (ix > 0) acc -= weight_x_ * x[k - 1];
                if (ix + 1 < nx_) acc -= weight_x_ * x[k + 1];
                if (iy > 0) acc -= weight_y_ * x[k - nx_];
                if (iy + 1 < ny_) acc -= weight_y_ * x[k + nx_];
                y[k] = acc;
            }
        }
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(x.size());
        apply(x, y);
        return y;
    }

    /// y = M x
    std::vector<double> apply_mass(std::span<const double> x) const {
        check_size(x.size());
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = mass_ * x[i];
        return y;
    }

    /// Physical coordinates of interior node i.
    std::array<double, 2> coordinates(std::size_t i) const {
        const auto [ix, iy] = split(i);
        std::array<double, 2> xy{(ix + 1) * spec_.mesh_width(0), 0.0};
        if (spec_.kind == DomainKind::Rectangle) xy[1] = (iy + 1) * spec_.mesh_width(1);
        return xy;
    }

    GridFunction sample(const std::function<double(double, double)>& fn) const {
        GridFunction g(spec_);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto xy = coordinates(i);
            g[i] = fn(xy[0], xy[1]);
        }
        return g;
    }

    void check_size(std::size_t n) const {
        detail::require(n == node_count(), ErrorCode::DimensionMismatch,
                        "vector of length " + std::to_string(n) + " does not match " +
                            std::to_string(node_count()) + " grid nodes");
    }

    void check(const GridFunction& g) const {
        check_size(g.size());
        detail::require(g.spec == spec_, ErrorCode::DimensionMismatch, "grid function belongs to another grid");
    }

private:
    std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ix);
    }

    std::pair<long, long> split(std::size_t i) const {
        return {static_cast<long>(i % static_cast<std::size_t>(nx_)), static_cast<long>(i / static_cast<std::size_t>(nx_))};
    }

    DomainSpec spec_;
    int nx_ = 0;
    int ny_ = 1;
    double weight_x_ = 0.0;
    double weight_y_ = 0.0;
    double diagonal_ = 0.0;
    double mass_ = 0.0;
};

inline DiscreteLaplacian build_operators(const DomainSpec& spec) { return DiscreteLaplacian(spec); }

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

} // namespace detail

/// Discrete Dirichlet energy u^T A u.
inline double dirichlet_energy(const DiscreteLaplacian& op, const GridFunction& u) {
    op.check_size(u.size());
    const auto au = op.apply(u.view());
    return std::max(0.0, detail::dot(u.view(), au));
}

/// Mass-weighted inner product u^T M v.
inline double mass_inner(const DiscreteLaplacian& op, std::span<const double> u, std::span<const double> v) {
    op.check_size(u.size());
    op.check_size(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += op.mass(i) * u[i] * v[i];
    return s;
}

struct SpdSolveResult {
    GridFunction solution;
    int iterations = 0;
    double relative_residual = 0.0;
};

inline constexpr double kDefaultLinearTol = 1e-10;

/// Conjugate gradients for A x = b with a relative-residual stopping rule.
/// The final residual is recomputed from b - A x; if the recurrence drifted the
/// iteration restarts from the true residual. Default limit is 50 * nodeCount.
inline SpdSolveResult solve_spd_system(const DiscreteLaplacian& op, std::span<const double> b, double tol,
                                       const GridFunction* initial = nullptr, int max_iterations = 0) {
    detail::require(tol > 0.0, ErrorCode::InvalidArgument, "linear tolerance must be positive");
    op.check_size(b.size());
    const std::size_t n = b.size();
    if (max_iterations <= 0) max_iterations = static_cast<int>(50 * n);

    SpdSolveResult out{GridFunction(op.spec()), 0, 0.0};
    auto& x = out.solution.values;
    const double b_norm = detail::norm2(b);
    if (b_norm == 0.0) return out;
    if (initial != nullptr) {
        op.check_size(initial->size());
        x = initial->values;
    }

    std::vector<double> r(n), p(n), ap(n);
    auto true_residual = [&] {
        op.apply(x, ap);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
        return detail::norm2(r);
    };

    const double target = tol * b_norm;
    double r_norm = true_residual();
    int restarts = 0;
    while (r_norm > target) {
        p = r;
        double rr = r_norm * r_norm;
        bool converged_recurrence = false;
        while (out.iterations < max_iterations) {
            op.apply(p, ap);
            const double pap = detail::dot(p, ap);
            if (!(pap > 0.0)) break;
            const double step = rr / pap;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            ++out.iterations;
            const double rr_next = detail::dot(r, r);
            if (std::sqrt(rr_next) <= target) {
                converged_recurrence = true;
                break;
            }
            const double beta = rr_next / rr;
            rr = rr_next;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        }
        r_norm = true_residual();
        if (r_norm <= target) break;
        if (!converged_recurrence || out.iterations >= max_iterations || ++restarts > 8) {
            detail::fail(ErrorCode::NoConvergence,
                         "conjugate gradients stalled at relative residual " + std::to_string(r_norm / b_norm) +
                             " after " + std::to_string(out.iterations) + " iterations (tol " + std::to_string(tol) +
                             ")");
        }
    }
    out.relative_residual = r_norm / b_norm;
    return out;
}

/// Solves A u = M g where `rhs` holds the nodal values of g.
inline GridFunction solve_spd(const DiscreteLaplacian& op, const GridFunction& rhs, double tol = kDefaultLinearTol) {
    op.check_size(rhs.size());
    const auto b = op.apply_mass(rhs.view());
    return solve_spd_system(op, b, tol).solution;
}

struct Eigenpair {
    double value = 0.0;
    GridFunction vector;
    int iterations = 0;
};

/// Smallest eigenpair of A e = lambda M e by unshifted inverse power
/// iteration. The eigenvector is positive and normalized so e^T M e = 1.
inline Eigenpair principal_eigenvalue(const DiscreteLaplacian& op, double tol = 1e-10, int max_iterations = 500) {
    detail::require(tol > 0.0, ErrorCode::InvalidArgument, "eigenvalue tolerance must be positive");
    const std::size_t n = op.node_count();
    GridFunction v(op.spec(), 1.0);
    auto normalize = [&](GridFunction& w) {
        const double s = std::sqrt(mass_inner(op, w.view(), w.view()));
        for (double& x : w.values) x /= s;
    };
    normalize(v);

    const double linear_tol = std::min(1e-11, tol);
    double lambda = std::numeric_limits<double>::infinity();
    GridFunction warm(op.spec());
    for (int it = 1; it <= max_iterations; ++it) {
        const auto b = op.apply_mass(v.view());
        auto solve = solve_spd_system(op, b, linear_tol, &warm);
        GridFunction w = std::move(solve.solution);
        const double rayleigh = dirichlet_energy(op, w) / mass_inner(op, w.view(), w.view());
        normalize(w);
        // warm start for the next solve: A^{-1} M w ~ w / lambda
        warm = w;
        for (double& x : warm.values) x /= rayleigh;
        v = std::move(w);
        const bool done = std::abs(rayleigh - lambda) <= tol * rayleigh;
        lambda = rayleigh;
        if (done) {
            for (std::size_t i = 0; i < n; ++i) {
                detail::require(v[i] > 0.0, ErrorCode::NoConvergence, "principal eigenvector lost positivity");
            }
            return Eigenpair{lambda, std::move(v), it};
        }
    }
    detail::fail(ErrorCode::NoConvergence, "inverse power iteration did not converge");
}

/// Closed-form principal eigenvalue of the continuum Dirichlet Laplacian.
inline double continuum_principal_eigenvalue(const DomainSpec& spec) {
    const double pi2 = M_PI * M_PI;
    double lambda = pi2 / (spec.lengths[0] * spec.lengths[0]);
    if (spec.kind == DomainKind::Rectangle) lambda += pi2 / (spec.lengths[1] * spec.lengths[1]);
    return lambda;
}

/// CSV with columns nodeIndex,x[,y],value in lexicographic node order.
inline void write_csv(std::ostream& os, const DiscreteLaplacian& op, const GridFunction& u) {
    op.check_size(u.size());
    const bool two_d = op.spec().kind == DomainKind::Rectangle;
    os << (two_d ? "nodeIndex,x,y,value\n" : "nodeIndex,x,value\n");
    os << std::setprecision(17);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto xy = op.coordinates(i);
        os << i << ',' << xy[0];
        if (two_d) os << ',' << xy[1];
        os << ',' << u[i] << '\n';
    }
}

} // namespace kirchhoff
