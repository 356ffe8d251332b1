#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kirchhoff/branch.hpp"
#include "kirchhoff/config.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/fixpoint.hpp"
#include "kirchhoff/grid.hpp"
#include "kirchhoff/oracle.hpp"
#include "kirchhoff/sublinear.hpp"
#include "kirchhoff/verify.hpp"

namespace kirchhoff {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kOracleFineN = 8192;

/// Report fields excluded from determinism comparisons.
inline const std::vector<std::string>& report_mask() {
    static const std::vector<std::string> mask{"/timings"};
    return mask;
}

inline nlohmann::json masked_report(nlohmann::json report) {
    for (const auto& pointer : report_mask()) {
        const nlohmann::json::json_pointer ptr(pointer);
        if (report.contains(ptr)) report[ptr.parent_pointer()].erase(ptr.back());
    }
    return report;
}

namespace detail {

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

/// JSON number, or null for non-finite values.
inline nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json branch_json(const KirchhoffBranch& b) {
    return {{"name", b.name()},
            {"tLo", number(b.lower())},
            {"tHi", number(b.upper())},
            {"tHiInfinite", std::isinf(b.upper())},
            {"rangeLow", number(b.range_low())},
            {"rangeHigh", number(b.range_high())},
            {"rangeFull", b.range_full()}};
}

inline nlohmann::json grid_json(const DomainSpec& d) {
    nlohmann::json g{{"kind", d.kind == DomainKind::Interval ? "interval" : "rectangle"}};
    if (d.kind == DomainKind::Interval) {
        g["lengths"] = {d.lengths[0]};
        g["resolution"] = {d.resolution[0]};
        g["h"] = {d.mesh_width(0)};
    } else {
        g["lengths"] = {d.lengths[0], d.lengths[1]};
        g["resolution"] = {d.resolution[0], d.resolution[1]};
        g["h"] = {d.mesh_width(0), d.mesh_width(1)};
    }
    g["nodeCount"] = d.node_count();
    return g;
}

inline nlohmann::json branch_report_json(const BranchValidationReport& r) {
    return {{"monotoneOk", r.monotone_ok},     {"positiveOk", r.positive_ok},
            {"rangeLow", number(r.range_low)}, {"rangeHigh", number(r.range_high)},
            {"rangeHighUnbounded", r.range_high_unbounded}, {"rangeFull", r.range_full()},
            {"samples", r.samples},            {"notes", r.notes}};
}

inline nlohmann::json nonlinearity_report_json(const NonlinearityReport& r) {
    return {{"signOk", r.sign_ok},
            {"quotientDecreasingOk", r.quotient_decreasing_ok},
            {"nondecreasingOk", r.nondecreasing_ok},
            {"blowupAtZeroOk", r.blowup_at_zero_ok},
            {"vanishingAtInfinityOk", r.vanishing_at_infinity_ok},
            {"lowEndSlope", number(r.low_end_slope)},
            {"highEndSlope", number(r.high_end_slope)},
            {"gridPoints", r.grid_points},
            {"notes", r.notes}};
}

inline nlohmann::json verify_json(const VerificationReport& v) {
    return {{"ok", v.ok()},
            {"aprioriLhs", number(v.apriori_lhs)},
            {"aprioriRhs", number(v.apriori_rhs)},
            {"aprioriRatio", number(v.apriori_rhs > 0.0 ? v.apriori_lhs / v.apriori_rhs : NAN)},
            {"aprioriOk", v.apriori_ok},
            {"minimizationOk", v.minimization_ok},
            {"minimizationMargin", number(v.minimization_margin)},
            {"minimizationValue", number(v.minimization_value)},
            {"positivityOk", v.positivity_ok},
            {"localizationOk", v.localization_ok},
            {"multiStartSpread", number(v.multi_start_spread)},
            {"lambda1Discrete", number(v.lambda1_discrete)},
            {"lambda1Continuum", number(v.lambda1_continuum)},
            {"notes", v.notes}};
}

inline nlohmann::json saddle_json(const SaddleProbe& p) {
    return {{"lambdaSamples", p.lam_samples.size()},
            {"trialFunctions", p.u_samples.size()},
            {"phiCenter", number(p.phi_center)},
            {"eps", number(p.eps)},
            {"worstLambdaMargin", number(p.worst_lambda_margin)},
            {"worstFunctionMargin", number(p.worst_function_margin)},
            {"ok", p.ok()},
            {"seed", p.seed}};
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline FixpointOptions fixpoint_options(const RunConfig& cfg) {
    FixpointOptions o;
    o.frozen.tol = cfg.tolerances.frozen;
    o.frozen.linear_tol = cfg.tolerances.linear;
    o.root_tol = cfg.tolerances.root;
    o.lam_min = cfg.lam_min;
    o.lam_max = cfg.lam_max;
    return o;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::InvalidConfig, "cannot write " + path.string());
    out << text;
}

} // namespace detail

struct RunOutcome {
    int exit_code = 0;
    nlohmann::json report;
    std::optional<KirchhoffSolution> solution;
};

/// validate -> solve -> saddle probe -> verify. Writes solution.csv and
/// report.json into cfg.output_dir when `write_files` is set; on failure the
/// report still carries the error and the diagnostics gathered so far.
inline RunOutcome run_pipeline(const RunConfig& cfg, bool write_files = true) {
    RunOutcome out;
    auto& rep = out.report;
    detail::Stopwatch clock;
    rep["toolVersion"] = kToolVersion;
    rep["configHash"] = detail::hex64(cfg.hash());
    rep["seed"] = cfg.seed;
    rep["grid"] = detail::grid_json(cfg.domain);
    rep["reportMask"] = report_mask();
    rep["golden"] = {{"t1", kGoldenT1Half}, {"q", 0.5}, {"alpha", 1.0}, {"length", 1.0},
                     {"method", "shooting, adaptive RK45, rtol 1e-13"}};
    rep["status"] = "running";

    auto finish = [&](int code) {
        out.exit_code = code;
        if (write_files) {
            std::filesystem::create_directories(cfg.output_dir);
            detail::write_text(cfg.output_dir / "report.json", rep.dump(2) + "\n");
        }
        return out;
    };

    std::optional<DiscreteLaplacian> op;
    std::optional<Nonlinearity> nl;
    std::optional<KirchhoffBranch> branch;
    try {
        op.emplace(build_operators(cfg.domain));
        const auto coeff = cfg.alpha.build(*op);
        nl.emplace(cfg.nonlinearity.build());
        branch.emplace(cfg.branch.build());
        rep["branch"] = detail::branch_json(*branch);
        rep["nonlinearity"] = nl->name();
        rep["q"] = nl->is_power() ? nlohmann::json(nl->exponent()) : nlohmann::json(nullptr);
        rep["alpha"] = {{"kind", cfg.alpha.kind},
                        {"essSup", coeff.ess_sup},
                        {"integral", coeff.integral}};
        rep["timings"]["setup"] = clock.lap();

        const auto branch_report = validate_branch(*branch);
        const auto nl_report = validate_nonlinearity(*nl);
        rep["checks"]["branchValidation"] = detail::branch_report_json(branch_report);
        rep["checks"]["nonlinearityValidation"] = detail::nonlinearity_report_json(nl_report);
        if (!branch_report.ok() || !nl_report.ok()) {
            detail::fail(ErrorCode::ValidationFailed, branch_report.notes + nl_report.notes);
        }

        const Route route = cfg.route == RouteChoice::Lambda ? Route::LambdaBisect
                            : cfg.route == RouteChoice::T    ? Route::TEquation
                            : nl->is_power()                 ? Route::TEquation
                                                             : Route::LambdaBisect;
        rep["route"] = std::string(to_string(route));
        const auto fopts = detail::fixpoint_options(cfg);
        if (nl->is_power()) {
            // the lam = 1 frozen energy is the branch-independent invariant
            const auto base = solve_frozen(*op, coeff, *nl, 1.0, fopts.frozen);
            rep["diagnostics"]["phiU1"] = base.phi;
            rep["diagnostics"]["lamWindow"] = {cfg.lam_min, cfg.lam_max};
            if (route == Route::TEquation) {
                out.solution = solve_t_equation(*op, coeff, *nl, *branch, fopts, &base);
                out.solution->inner_solves = 1;
            }
        }
        if (!out.solution) out.solution = solve_lambda_bisect(*op, coeff, *nl, *branch, fopts);
        rep["timings"]["solve"] = clock.lap();

        const auto& sol = *out.solution;
        rep["tTilde"] = sol.t_tilde;
        rep["lamTilde"] = sol.lam_tilde;
        rep["kirchhoffResidual"] = sol.kirchhoff_residual;
        rep["innerSolves"] = sol.inner_solves;
        rep["localizationError"] = sol.localization_error;
        rep["boundaryDistance"] = sol.boundary_distance;
        if (nl->is_power()) {
            const double q = nl->exponent();
            rep["diagnostics"]["kInvariant"] = std::pow(sol.lam_tilde, 2.0 / (1.0 - q)) * sol.t_tilde;
        }

        if (cfg.domain.kind == DomainKind::Interval && cfg.alpha.kind == "constant" && nl->is_power()) {
            const auto shot = oracle_shoot(nl->exponent(), cfg.alpha.value, cfg.domain.lengths[0], kOracleFineN);
            const double phi_u1 = rep["diagnostics"]["phiU1"].get<double>();
            rep["oracle"] = {{"method", "shooting"},
                             {"q", nl->exponent()},
                             {"alpha", cfg.alpha.value},
                             {"length", cfg.domain.lengths[0]},
                             {"fineN", kOracleFineN},
                             {"t1", shot.t1},
                             {"relativeDifference", std::abs(phi_u1 - shot.t1) / shot.t1}};
        }
        rep["timings"]["oracle"] = clock.lap();

        if (write_files) {
            std::filesystem::create_directories(cfg.output_dir);
            std::ofstream csv(cfg.output_dir / "solution.csv");
            detail::require(static_cast<bool>(csv), ErrorCode::InvalidConfig, "cannot write solution.csv");
            write_csv(csv, *op, sol.u);
        }

        SaddleOptions sopts;
        sopts.lam_samples = cfg.saddle_lambda_samples;
        sopts.perturbations = cfg.saddle_perturbations;
        sopts.seed = cfg.seed;
        try {
            rep["checks"]["saddle"] = detail::saddle_json(saddle_probe(sol, *op, coeff, *nl, sopts));
        } catch (const Error& e) {
            rep["checks"]["saddle"] = {{"ok", false}, {"message", e.what()}};
            throw;
        }
        rep["timings"]["saddle"] = clock.lap();

        VerifyOptions vopts;
        vopts.starts = cfg.verify_starts;
        vopts.perturbations = cfg.verify_perturbations;
        vopts.spread_tol = cfg.tolerances.verify;
        vopts.seed = cfg.seed;
        vopts.frozen = fopts.frozen;
        const auto ver = verify_solution(sol, *op, coeff, *nl, vopts);
        rep["verify"] = detail::verify_json(ver);
        rep["localizationOk"] = ver.localization_ok;
        rep["timings"]["verify"] = clock.lap();
        if (!ver.ok()) detail::fail(ErrorCode::VerificationFailed, ver.notes);
        rep["status"] = "ok";
        return finish(0);
    } catch (const Error& e) {
        rep["status"] = "error";
        rep["error"] = {{"code", std::string(to_string(e.code()))},
                        {"exitStatus", exit_status(e.code())},
                        {"message", e.what()}};
        if (e.code() == ErrorCode::NoCrossing && branch) {
            rep["error"]["branchRangeCaveat"] =
                branch->range_full()
                    ? "K maps the branch onto (0, +inf); the fixed point fell outside the admissible lambda window"
                    : "K does not map the branch onto (0, +inf); a fixed point on this branch is not guaranteed";
        }
        return finish(exit_status(e.code()));
    }
}

struct SurveyOutcome {
    int exit_code = 0;
    SurveyTable table;
    std::string csv;
};

inline std::string survey_csv(const SurveyTable& table) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "branch,tLo,tHi,tTilde,lamTilde,aprioriLhs,aprioriRhs,status\n";
    for (const auto& r : table.rows) {
        os << r.branch << ',' << r.t_lo << ',' << r.t_hi << ',' << r.t_tilde << ',' << r.lam_tilde << ','
           << r.apriori_lhs << ',' << r.apriori_rhs << ',' << r.status << '\n';
    }
    return os.str();
}

/// Cross-branch survey over `branches` (or the config's survey list). Rows
/// failing branch validation are marked INVALID and make the exit status
/// ValidationFailed; other per-branch errors are recorded only.
inline SurveyOutcome run_survey(const RunConfig& cfg, std::optional<std::vector<BranchSpec>> branches = std::nullopt,
                                bool write_files = true) {
    SurveyOutcome out;
    try {
        const auto specs = branches ? *branches : cfg.survey_specs();
        const auto op = build_operators(cfg.domain);
        const auto coeff = cfg.alpha.build(op);
        const auto nl = cfg.nonlinearity.build();
        detail::require(nl.is_power(), ErrorCode::InvalidConfig, "survey requires a power nonlinearity");
        std::vector<KirchhoffBranch> list;
        for (const auto& s : specs) list.push_back(s.build());
        double lambda1 = 0.0;
        if (!list.empty()) lambda1 = principal_eigenvalue(op, 1e-12).value;
        out.table = cross_branch_survey(op, coeff, nl, list, lambda1, detail::fixpoint_options(cfg));
        out.csv = survey_csv(out.table);
        for (const auto& r : out.table.rows) {
            if (r.status == "INVALID") out.exit_code = exit_status(ErrorCode::ValidationFailed);
        }
        if (write_files) {
            std::filesystem::create_directories(cfg.output_dir);
            detail::write_text(cfg.output_dir / "survey.csv", out.csv);
        }
    } catch (const Error& e) {
        out.exit_code = exit_status(e.code());
        out.csv = std::string("error: ") + e.what() + "\n";
    }
    return out;
}

/// Checks the config, the branch hypotheses and the nonlinearity hypotheses
/// without solving.
inline RunOutcome run_validate(const RunConfig& cfg) {
    RunOutcome out;
    auto& rep = out.report;
    try {
        const auto op = build_operators(cfg.domain);
        const auto coeff = cfg.alpha.build(op);
        const auto nl = cfg.nonlinearity.build();
        const auto branch = cfg.branch.build();
        const auto br = validate_branch(branch);
        const auto nr = validate_nonlinearity(nl);
        rep["grid"] = detail::grid_json(cfg.domain);
        rep["branch"] = detail::branch_json(branch);
        rep["alpha"] = {{"kind", cfg.alpha.kind}, {"essSup", coeff.ess_sup}, {"integral", coeff.integral}};
        rep["checks"]["branchValidation"] = detail::branch_report_json(br);
        rep["checks"]["nonlinearityValidation"] = detail::nonlinearity_report_json(nr);
        const bool ok = br.ok() && nr.ok();
        rep["status"] = ok ? "ok" : "invalid";
        out.exit_code = ok ? 0 : exit_status(ErrorCode::ValidationFailed);
    } catch (const Error& e) {
        rep["status"] = "error";
        rep["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
        out.exit_code = exit_status(e.code());
    }
    return out;
}

} // namespace kirchhoff
