// Command-line driver: run, oracle, survey, validate.

#include <cstdio>
#include <iomanip>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kirchhoff/kirchhoff.hpp"

namespace {

int report_error(const kirchhoff::Error& e) {
    std::cerr << "error [" << kirchhoff::to_string(e.code()) << "]: " << e.what() << '\n';
    return kirchhoff::exit_status(e.code());
}

int cmd_run(const std::string& config_path, bool quiet) {
    const auto cfg = kirchhoff::RunConfig::load(config_path);
    const auto out = kirchhoff::run_pipeline(cfg);
    const auto& rep = out.report;
    if (out.exit_code != 0) {
        std::cerr << "error [" << rep["error"]["code"].get<std::string>()
                  << "]: " << rep["error"]["message"].get<std::string>() << '\n';
        if (rep["error"].contains("branchRangeCaveat")) {
            std::cerr << "note: " << rep["error"]["branchRangeCaveat"].get<std::string>() << '\n';
        }
    } else if (!quiet) {
        std::printf("branch %s  route %s  tTilde %.12g  lamTilde %.12g  residual %.3g\n",
                    rep["branch"]["name"].get<std::string>().c_str(), rep["route"].get<std::string>().c_str(),
                    rep["tTilde"].get<double>(), rep["lamTilde"].get<double>(),
                    rep["kirchhoffResidual"].get<double>());
    }
    if (!quiet) std::printf("report written to %s\n", (cfg.output_dir / "report.json").string().c_str());
    return out.exit_code;
}

int cmd_oracle(double q, double alpha, double length, int fine_n) {
    const auto r = kirchhoff::oracle_shoot(q, alpha, length, fine_n);
    const nlohmann::json j{{"q", q},           {"alpha", alpha},       {"length", length},
                           {"fineN", fine_n},  {"t1", r.t1},          {"slope", r.slope},
                           {"endValue", r.end_value}, {"bisections", r.bisections}};
    std::cout << std::setprecision(17) << j.dump(2) << '\n';
    return 0;
}

int cmd_survey(const std::string& config_path, const std::vector<std::string>& branch_args, bool use_args) {
    const auto cfg = kirchhoff::RunConfig::load(config_path);
    std::optional<std::vector<kirchhoff::BranchSpec>> specs;
    if (use_args) {
        specs.emplace();
        for (const auto& b : branch_args) specs->push_back(kirchhoff::BranchSpec::parse(b));
    }
    const auto out = kirchhoff::run_survey(cfg, specs);
    for (const auto& r : out.table.rows) {
        std::printf("%-24s %-10s tTilde %.12g  lamTilde %.12g  %s\n", r.branch.c_str(), r.status.c_str(), r.t_tilde,
                    r.lam_tilde, r.message.c_str());
    }
    if (out.exit_code != 0 && out.table.rows.empty()) std::cerr << out.csv;
    return out.exit_code;
}

int cmd_validate(const std::string& config_path) {
    const auto cfg = kirchhoff::RunConfig::load(config_path);
    const auto out = kirchhoff::run_validate(cfg);
    std::cout << out.report.dump(2) << '\n';
    return out.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical solver for Kirchhoff-type nonlocal sublinear elliptic problems"};
    app.set_version_flag("--version", kirchhoff::kToolVersion);
    app.require_subcommand(1);

    std::string config;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "validate, solve, verify; writes solution.csv and report.json");
    run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
    run->add_flag("-q,--quiet", quiet, "suppress the summary line");

    double q = 0.5, alpha = 1.0, length = 1.0;
    int fine_n = 8192;
    auto* oracle = app.add_subcommand("oracle", "shooting reference for t_1 of the 1D lambda = 1 problem");
    oracle->add_option("--q", q, "exponent in (0,1)");
    oracle->add_option("--alpha", alpha, "constant coefficient");
    oracle->add_option("--length", length, "interval length");
    oracle->add_option("--fine-n", fine_n, "step cap L/fineN, fineN >= 4096");

    std::vector<std::string> branches;
    auto* survey = app.add_subcommand("survey", "solve on a list of branches and write survey.csv");
    survey->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
    auto* branch_opt = survey->add_option("-b,--branch", branches, "branch, e.g. tan:2, log, affine:1:0 (repeatable)");

    auto* validate = app.add_subcommand("validate", "check config and hypotheses without solving");
    validate->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kirchhoff::exit_status(kirchhoff::ErrorCode::InvalidArgument);
    }

    try {
        if (*run) return cmd_run(config, quiet);
        if (*oracle) return cmd_oracle(q, alpha, length, fine_n);
        if (*survey) return cmd_survey(config, branches, branch_opt->count() > 0);
        if (*validate) return cmd_validate(config);
    } catch (const kirchhoff::Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
