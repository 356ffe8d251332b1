// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kirchhoff/kirchhoff.hpp"

using namespace kirchhoff;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_max_diff(const GridFunction& a, const GridFunction& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d / std::max(a.max(), b.max());
}

double relative_spread(const std::vector<double>& v) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return (*mx - *mn) / std::abs(*mx);
}

std::vector<KirchhoffBranch> route_branches() {
    return {KirchhoffBranch::tan(1), KirchhoffBranch::tan(2), KirchhoffBranch::tan(3), KirchhoffBranch::log(),
            KirchhoffBranch::affine(1.0, 0.0)};
}

struct Problem {
    DiscreteLaplacian op;
    Coefficient alpha;
    Nonlinearity f;
};

Problem unit_interval(int m, double q = 0.5) {
    auto op = build_operators(DomainSpec::interval(1.0, m));
    auto alpha = Coefficient::constant(op, 1.0);
    return {std::move(op), std::move(alpha), Nonlinearity::power(q)};
}

int run_cli(const std::string& args, const fs::path& outdir) {
    const std::string cmd =
        "KIRCHHOFF_OUTPUT_DIR='" + outdir.string() + "' '" KIRCHHOFF_CLI_PATH "' " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string sample(const std::string& name) { return std::string("'") + KIRCHHOFF_SAMPLES_DIR "/" + name + "'"; }

Outcome eigenvalue_check() {
    auto t0 = std::chrono::steady_clock::now();
    const double l1 = principal_eigenvalue(build_operators(DomainSpec::interval(1.0, 256))).value;
    const double s1 = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const double l2 = principal_eigenvalue(build_operators(DomainSpec::rectangle(1.0, 1.0, 128))).value;
    const double s2 = seconds_since(t0);
    const double e1 = std::abs(l1 - pi * pi) / (pi * pi);
    const double e2 = std::abs(l2 - 2.0 * pi * pi) / (2.0 * pi * pi);
    return {e1 < 5e-3 && e2 < 1e-2 && s1 < 5.0 && s2 < 5.0,
            fmt("interval rel err %.2e (%.2fs), square rel err %.2e (%.2fs)", e1, s1, e2, s2)};
}

Outcome poisson_oracle() {
    // the 3-point solution of -u'' = 1 is nodally exact, so the order is
    // measured on the energy error |Phi_h - 1/12|
    bool ok = true;
    double worst = 0.0;
    std::vector<double> hs, energy_err;
    for (int m : {64, 128, 256}) {
        const auto op = build_operators(DomainSpec::interval(1.0, m));
        const auto u = solve_spd(op, GridFunction(op.spec(), 1.0), 1e-12);
        const double h = op.spec().mesh_width(0);
        double err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double x = op.coordinates(i)[0];
            err = std::max(err, std::abs(u[i] - x * (1.0 - x) / 2.0));
        }
        ok = ok && err <= 2.0 * h * h;
        worst = std::max(worst, err / (h * h));
        hs.push_back(h);
        energy_err.push_back(std::abs(dirichlet_energy(op, u) - 1.0 / 12.0));
    }
    std::vector<double> orders;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
        orders.push_back(std::log(energy_err[i] / energy_err[i + 1]) / std::log(hs[i] / hs[i + 1]));
    }
    for (double p : orders) ok = ok && p >= 1.9 && p <= 2.1;
    return {ok, fmt("max err/h^2 %.2e, energy-error orders %.4f %.4f", worst, orders[0], orders[1])};
}

Outcome scaling_law() {
    bool ok = true;
    std::string detail;
    for (double q : {0.25, 0.5, 0.75}) {
        const auto p = unit_interval(256, q);
        const auto base = solve_frozen(p.op, p.alpha, p.f, 1.0);
        const auto direct = solve_frozen(p.op, p.alpha, p.f, 2.0);
        const auto scaled = scale_solution(p.op, p.alpha, p.f, base, 2.0);
        const double rel = std::abs(direct.phi - scaled.phi) / direct.phi;
        ok = ok && rel <= 1e-6;
        detail += fmt("q=%.2f %.1e  ", q, rel);
    }
    return {ok, detail};
}

Outcome frozen_uniqueness() {
    const auto p = unit_interval(256);
    FrozenOptions o;
    std::vector<GridFunction> us;
    for (double scale : {1.0, 2.0, 5.0}) {
        o.start_scale = scale;
        us.push_back(solve_frozen(p.op, p.alpha, p.f, 1.0, o).u);
    }
    const double d = std::max(rel_max_diff(us[0], us[1]), rel_max_diff(us[0], us[2]));
    return {d <= 1e-8, fmt("starts x1, x2, x5: max relative difference %.2e", d)};
}

Outcome route_agreement() {
    const auto p = unit_interval(256);
    const auto base = solve_frozen(p.op, p.alpha, p.f, 1.0);
    double worst = 0.0;
    for (const auto& b : route_branches()) {
        const double tl = solve_lambda_bisect(p.op, p.alpha, p.f, b).t_tilde;
        const double tt = solve_t_equation(p.op, p.alpha, p.f, b, {}, &base).t_tilde;
        worst = std::max(worst, std::abs(tl - tt) / tt);
    }
    return {worst <= 1e-6, fmt("worst relative difference %.2e over 5 branches", worst)};
}

Outcome localization() {
    const auto p = unit_interval(256);
    const auto base = solve_frozen(p.op, p.alpha, p.f, 1.0);
    bool ok = true;
    std::vector<double> tt;
    double worst_spread = 0.0;
    for (int k = 1; k <= 3; ++k) {
        const auto b = KirchhoffBranch::tan(k);
        const double lo = (k - 1) * pi, hi = lo + pi / 2.0, w = hi - lo;
        const std::vector<std::pair<double, double>> brackets{
            {lo, hi}, {lo + 0.4 * w, lo + 0.6 * w}, {lo + 0.9 * w, lo + 0.99 * w}, {lo + 1e-6 * w, lo + 1e-3 * w},
            {lo + 0.2 * w, lo + 0.95 * w}};
        std::vector<double> ts;
        for (const auto& br : brackets) {
            FixpointOptions o;
            o.t_bracket = br;
            const auto sol = solve_t_equation(p.op, p.alpha, p.f, b, o, &base);
            ok = ok && sol.t_tilde > lo && sol.t_tilde < hi && sol.u.min() > 0.0;
            ts.push_back(sol.t_tilde);
        }
        worst_spread = std::max(worst_spread, relative_spread(ts));
        tt.push_back(ts.front());
    }
    ok = ok && worst_spread <= 1e-8 && tt[0] < tt[1] && tt[1] < tt[2];
    return {ok, fmt("tTilde %.9f %.9f %.9f, bracket spread %.1e", tt[0], tt[1], tt[2], worst_spread)};
}

Outcome k_invariance() {
    const auto p = unit_interval(512);
    const auto base = solve_frozen(p.op, p.alpha, p.f, 1.0);
    std::vector<double> col;
    for (const auto& b : route_branches()) {
        const auto sol = solve_t_equation(p.op, p.alpha, p.f, b, {}, &base);
        col.push_back(std::pow(eval_K(b, sol.t_tilde), 2.0 / (1.0 - 0.5)) * sol.t_tilde);
    }
    double to_phi = 0.0;
    for (double c : col) to_phi = std::max(to_phi, std::abs(c - base.phi) / base.phi);
    const double spread = relative_spread(col);
    const double t1 = oracle_shoot(0.5, 1.0, 1.0, kOracleFineN).t1;
    const double vs_oracle = std::abs(base.phi - t1) / t1;
    return {spread <= 1e-8 && to_phi <= 1e-8 && vs_oracle <= 1e-4,
            fmt("column spread %.1e, vs Phi(u1) %.1e, vs shooting t1 %.2e (m=512)", spread, to_phi, vs_oracle)};
}

Outcome apriori_matrix() {
    const auto grid = build_operators(DomainSpec::interval(1.0, 256));
    const double lambda1 = principal_eigenvalue(grid, 1e-12).value;
    double worst = 0.0;
    int cells = 0;
    bool ok = true;
    for (double q : {0.25, 0.5, 0.75}) {
        const auto f = Nonlinearity::power(q);
        for (const auto& alpha : {Coefficient::constant(grid, 1.0), Coefficient::linear_ramp(grid, 1.0, 1.0)}) {
            const auto base = solve_frozen(grid, alpha, f, 1.0);
            for (const auto& b : route_branches()) {
                const auto sol = solve_t_equation(grid, alpha, f, b, {}, &base);
                const auto c = check_apriori(sol, alpha, q, lambda1);
                ok = ok && c.ok && c.ratio() < 1.0;
                worst = std::max(worst, c.ratio());
                ++cells;
            }
        }
    }
    return {ok, fmt("%d cells, largest lhs/rhs %.4f", cells, worst)};
}

Outcome minimization() {
    const auto p = unit_interval(256);
    const auto sol = solve_t_equation(p.op, p.alpha, p.f, KirchhoffBranch::tan(1));
    const auto m = check_minimization(sol, p.op, p.alpha, p.f, 5, 1e-8, 200);
    return {m.ok && m.spread <= 1e-8 && m.value_at_solution < 0.0,
            fmt("spread %.1e, value %.6e, worst margin %.2e", m.spread, m.value_at_solution, m.worst_margin)};
}

Outcome saddle() {
    const auto p = unit_interval(256);
    SaddleOptions o;
    o.lam_samples = 21;
    o.perturbations = 50;
    bool ok = true;
    double worst_l = INFINITY, worst_f = INFINITY;
    for (const auto& b : route_branches()) {
        const auto sol = solve_t_equation(p.op, p.alpha, p.f, b);
        try {
            const auto probe = saddle_probe(sol, p.op, p.alpha, p.f, o);
            ok = ok && probe.ok() && probe.lam_samples.size() == 21;
            worst_l = std::min(worst_l, probe.worst_lambda_margin / std::max(probe.eps, 1e-300));
            worst_f = std::min(worst_f, probe.worst_function_margin / std::max(probe.eps, 1e-300));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SaddleViolation) throw;
            ok = false;
        }
    }
    return {ok, fmt("smallest margins in units of eps: lambda %.3g, function %.3g", worst_l, worst_f)};
}

Outcome no_crossing(const fs::path& scratch) {
    const fs::path out = scratch / "nocrossing";
    const int status = run_cli("run " + sample("nocrossing.cfg"), out);
    if (!fs::exists(out / "report.json")) return {false, fmt("exit %d, no report", status)};
    const auto rep = read_json(out / "report.json");
    const bool populated = rep.value("status", "") == "error" && rep["error"].value("code", "") == "NoCrossing" &&
                           rep["error"].contains("branchRangeCaveat") && rep["diagnostics"].contains("phiU1") &&
                           rep["checks"].contains("branchValidation");
    return {status == exit_status(ErrorCode::NoCrossing) && populated,
            fmt("exit %d (expected %d), report %s", status, exit_status(ErrorCode::NoCrossing),
                populated ? "populated" : "incomplete")};
}

Outcome determinism(const fs::path& scratch) {
    const int a = run_cli("run -q " + sample("tan1.cfg"), scratch / "det_a");
    const int b = run_cli("run -q " + sample("tan1.cfg"), scratch / "det_b");
    if (a != 0 || b != 0) return {false, fmt("exit statuses %d %d", a, b)};
    const auto ja = masked_report(read_json(scratch / "det_a" / "report.json")).dump(2);
    const auto jb = masked_report(read_json(scratch / "det_b" / "report.json")).dump(2);
    return {ja == jb, fmt("masked reports %s (%zu bytes)", ja == jb ? "identical" : "differ", ja.size())};
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path scratch = fs::temp_directory_path() / "kirchhoff_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"eigenvalue check", eigenvalue_check},
        {"Poisson oracle", poisson_oracle},
        {"scaling law", scaling_law},
        {"frozen-problem uniqueness", frozen_uniqueness},
        {"route agreement", route_agreement},
        {"localization", localization},
        {"K-invariance", k_invariance},
        {"a priori bound", apriori_matrix},
        {"minimization property", minimization},
        {"saddle inequalities", saddle},
        {"NoCrossing path", [&] { return no_crossing(scratch); }},
        {"pipeline determinism", [&] { return determinism(scratch); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("error: ") + e.what()};
        }
        if (!r.pass) ++failures;
        std::printf("%s  %2zu %-26s %s [%.2fs]\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    r.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    const double total = seconds_since(t0);
    std::printf("%d/%zu criteria passed in %.1fs (target < 600s)\n", static_cast<int>(criteria.size()) - failures,
                criteria.size(), total);
    fs::remove_all(scratch);
    return failures == 0 ? 0 : 1;
}
