#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kirchhoff/branch.hpp"
#include "kirchhoff/fixpoint.hpp"
#include "kirchhoff/grid.hpp"
#include "kirchhoff/random.hpp"
#include "kirchhoff/sublinear.hpp"

namespace kirchhoff {

struct AprioriCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
    double ratio() const { return lhs / rhs; }
};

/// Right-hand side of the a priori bound
/// [(2/(q+1))^2 (ess sup alpha / lambda_1)^{q+1}]^{1/(1-q)} int alpha.
inline double apriori_bound(double q, double ess_sup, double integral, double lambda1) {
    const double base = std::pow(2.0 / (q + 1.0), 2.0) * std::pow(ess_sup / lambda1, q + 1.0);
    return std::pow(base, 1.0 / (1.0 - q)) * integral;
}

/// lhs = K(t)^{2/(1-q)} t against apriori_bound.
inline AprioriCheck check_apriori(const KirchhoffSolution& sol, const Coefficient& coeff, double q, double lambda1) {
    detail::require(q > 0.0 && q < 1.0, ErrorCode::InvalidArgument, "a priori check needs q in (0,1)");
    detail::require(lambda1 > 0.0, ErrorCode::InvalidArgument, "a priori check needs lambda_1 > 0");
    AprioriCheck c;
    c.lhs = std::pow(sol.lam_tilde, 2.0 / (1.0 - q)) * sol.t_tilde;
    c.rhs = apriori_bound(q, coeff.ess_sup, coeff.integral, lambda1);
    c.ok = c.lhs <= c.rhs * (1.0 + 1e-8);
    return c;
}

struct MinimizationCheck {
    bool ok = false;
    double spread = 0.0;               // max relative max-norm distance of the restarts to u
    double value_at_solution = 0.0;    // frozen functional (1/2)(lam Phi - J) at u
    double worst_margin = 0.0;         // min over perturbations of E(v) - E(u)
    double worst_restart_value = 0.0;
    int starts = 0;
    int perturbations = 0;
    std::uint64_t seed = 0;
};

/// Frozen functional u -> (1/2) K(t) Phi(u) - int alpha F(u+).
inline double frozen_functional(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                double lam, const GridFunction& u) {
    return 0.5 * frozen_energy(op, coeff, nl, lam, u);
}

/// Restarts the frozen minimization at lam = K(t) from n_starts random
/// supersolution scalings and compares each minimizer with u; also samples
/// the functional around u.
inline MinimizationCheck check_minimization(const KirchhoffSolution& sol, const DiscreteLaplacian& op,
                                            const Coefficient& coeff, const Nonlinearity& nl, int n_starts, double tol,
                                            int n_perturbations = 200, std::uint64_t seed = 20240601,
                                            const FrozenOptions& frozen = {}) {
    detail::require(n_starts >= 5, ErrorCode::InvalidArgument, "check_minimization needs at least 5 starts");
    MinimizationCheck out;
    out.starts = n_starts;
    out.perturbations = n_perturbations;
    out.seed = seed;
    const double lam = sol.lam_tilde;
    out.value_at_solution = frozen_functional(op, coeff, nl, lam, sol.u);
    const double umax = sol.u.max();

    Rng rng(seed);
    bool restarts_below_zero = true;
    out.worst_restart_value = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_starts; ++s) {
        FrozenOptions fo = frozen;
        fo.seed = nullptr;
        fo.observer = nullptr;
        fo.start_scale = rng.uniform(1.0, 10.0);
        const auto run = solve_frozen(op, coeff, nl, lam, fo);
        double diff = 0.0;
        for (std::size_t i = 0; i < run.u.size(); ++i) diff = std::max(diff, std::abs(run.u[i] - sol.u[i]));
        out.spread = std::max(out.spread, diff / umax);
        const double value = 0.5 * run.energy;
        out.worst_restart_value = std::max(out.worst_restart_value, value);
        if (!(value < 0.0)) restarts_below_zero = false;
    }

    out.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_perturbations; ++i) {
        // alternate nodal noise and smooth bumps, magnitudes 1e-1 .. 1e-3 of max u
        const double size = umax * std::pow(10.0, -1.0 - 2.0 * rng.uniform());
        GridFunction v = sol.u;
        if (i % 2 == 0) {
            for (std::size_t k = 0; k < v.size(); ++k) v[k] += size * rng.uniform(-1.0, 1.0);
        } else {
            const auto bump = detail::random_coarse_function(op, rng, size, true);
            for (std::size_t k = 0; k < v.size(); ++k) v[k] += bump[k];
        }
        out.worst_margin = std::min(out.worst_margin, frozen_functional(op, coeff, nl, lam, v) - out.value_at_solution);
    }
    if (n_perturbations == 0) out.worst_margin = 0.0;
    out.ok = out.spread <= tol && out.value_at_solution < 0.0 && restarts_below_zero &&
             (n_perturbations == 0 || out.worst_margin > 0.0);
    return out;
}

struct PositivityLocalization {
    bool positivity_ok = false;
    bool localization_ok = false;
    double min_value = 0.0;
    double boundary_distance = 0.0;
    bool ok() const { return positivity_ok && localization_ok; }
};

inline PositivityLocalization check_positivity_localization(const KirchhoffSolution& sol) {
    PositivityLocalization r;
    r.min_value = sol.u.min();
    r.positivity_ok = sol.u.size() > 0 && r.min_value > 0.0;
    r.localization_ok = sol.branch.contains(sol.t_tilde);
    r.boundary_distance = std::min(sol.t_tilde - sol.branch.lower(), sol.branch.upper() - sol.t_tilde);
    return r;
}

struct VerificationReport {
    double apriori_lhs = 0.0;
    double apriori_rhs = 0.0;
    bool apriori_ok = false;
    bool minimization_ok = false;
    double minimization_margin = 0.0;
    double minimization_value = 0.0;
    bool positivity_ok = false;
    bool localization_ok = false;
    double multi_start_spread = 0.0;
    double lambda1_discrete = 0.0;
    double lambda1_continuum = 0.0;
    std::string notes;

    bool ok() const { return apriori_ok && minimization_ok && positivity_ok && localization_ok; }
};

struct VerifyOptions {
    int starts = 5;
    int perturbations = 200;
    double spread_tol = 1e-8;
    std::uint64_t seed = 20240601;
    double eigen_tol = 1e-12;
    FrozenOptions frozen;
};

/// Runs every post-hoc check on a computed solution. The a priori bound is
/// evaluated only for power nonlinearities.
inline VerificationReport verify_solution(const KirchhoffSolution& sol, const DiscreteLaplacian& op,
                                          const Coefficient& coeff, const Nonlinearity& nl,
                                          const VerifyOptions& opts = {}) {
    VerificationReport rep;
    rep.lambda1_discrete = principal_eigenvalue(op, opts.eigen_tol).value;
    rep.lambda1_continuum = continuum_principal_eigenvalue(op.spec());
    if (nl.is_power()) {
        const auto a = check_apriori(sol, coeff, nl.exponent(), rep.lambda1_discrete);
        rep.apriori_lhs = a.lhs;
        rep.apriori_rhs = a.rhs;
        rep.apriori_ok = a.ok;
    } else {
        rep.apriori_ok = true;
        detail::append_note(rep.notes, "a priori bound applies to power nonlinearities only");
    }
    const auto m =
        check_minimization(sol, op, coeff, nl, opts.starts, opts.spread_tol, opts.perturbations, opts.seed, opts.frozen);
    rep.minimization_ok = m.ok;
    rep.minimization_margin = m.worst_margin;
    rep.minimization_value = m.value_at_solution;
    rep.multi_start_spread = m.spread;
    const auto pl = check_positivity_localization(sol);
    rep.positivity_ok = pl.positivity_ok;
    rep.localization_ok = pl.localization_ok;
    if (!rep.apriori_ok) detail::append_note(rep.notes, "a priori inequality violated");
    if (!rep.minimization_ok) detail::append_note(rep.notes, "minimization property not confirmed");
    if (!rep.positivity_ok) detail::append_note(rep.notes, "solution not strictly positive");
    if (!rep.localization_ok) detail::append_note(rep.notes, "Dirichlet energy outside the branch");
    return rep;
}

struct SurveyRow {
    std::string branch;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double t_tilde = std::numeric_limits<double>::quiet_NaN();
    double lam_tilde = std::numeric_limits<double>::quiet_NaN();
    double apriori_lhs = std::numeric_limits<double>::quiet_NaN();
    double apriori_rhs = std::numeric_limits<double>::quiet_NaN();
    std::string status = "OK";   // OK, INVALID, or an error class name
    std::string message;
};

struct SurveyTable {
    std::vector<SurveyRow> rows;
    double phi_u1 = 0.0;
    double lhs_spread = 0.0;      // relative spread of the lhs column over solved rows
    bool lhs_invariant = true;
    bool tan_distinct = true;
    bool all_ok() const {
        return std::all_of(rows.begin(), rows.end(), [](const SurveyRow& r) { return r.status == "OK"; });
    }
};

/// Solves on every branch with one shared lam = 1 frozen solution and
/// tabulates the fixed points. Failures are recorded per row.
inline SurveyTable cross_branch_survey(const DiscreteLaplacian& op, const Coefficient& coeff, const Nonlinearity& nl,
                                       const std::vector<KirchhoffBranch>& branches, double lambda1,
                                       const FixpointOptions& opts = {}, double invariance_tol = 1e-8) {
    detail::require(nl.is_power(), ErrorCode::InvalidArgument, "cross-branch survey requires f(xi) = xi^q");
    SurveyTable table;
    if (branches.empty()) return table;
    const double q = nl.exponent();
    FrozenOptions fo = opts.frozen;
    fo.seed = nullptr;
    const auto base = solve_frozen(op, coeff, nl, 1.0, fo);
    table.phi_u1 = base.phi;
    const double rhs = apriori_bound(q, coeff.ess_sup, coeff.integral, lambda1);

    std::vector<double> lhs_values;
    for (const auto& branch : branches) {
        SurveyRow row;
        row.branch = branch.name();
        row.t_lo = branch.lower();
        row.t_hi = branch.upper();
        row.apriori_rhs = rhs;
        const auto validation = validate_branch(branch);
        if (!validation.ok()) {
            row.status = "INVALID";
            row.message = validation.notes;
            table.rows.push_back(std::move(row));
            continue;
        }
        try {
            const auto sol = solve_t_equation(op, coeff, nl, branch, opts, &base);
            row.t_tilde = sol.t_tilde;
            row.lam_tilde = sol.lam_tilde;
            row.apriori_lhs = std::pow(sol.lam_tilde, 2.0 / (1.0 - q)) * sol.t_tilde;
            lhs_values.push_back(row.apriori_lhs);
        } catch (const Error& e) {
            row.status = std::string(to_string(e.code()));
            row.message = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    if (!lhs_values.empty()) {
        const auto [mn, mx] = std::minmax_element(lhs_values.begin(), lhs_values.end());
        table.lhs_spread = (*mx - *mn) / std::abs(table.phi_u1);
        double dev = 0.0;
        for (double v : lhs_values) dev = std::max(dev, std::abs(v - table.phi_u1) / table.phi_u1);
        table.lhs_invariant = table.lhs_spread <= invariance_tol && dev <= invariance_tol;
    }
    std::vector<double> tan_t;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (std::holds_alternative<TanFamily>(branches[i].family()) && table.rows[i].status == "OK") {
            tan_t.push_back(table.rows[i].t_tilde);
        }
    }
    std::sort(tan_t.begin(), tan_t.end());
    for (std::size_t i = 1; i < tan_t.size(); ++i) {
        if (!(tan_t[i] > tan_t[i - 1])) table.tan_distinct = false;
    }
    return table;
}

} // namespace kirchhoff
