#include <cmath>
#include <numbers>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "kirchhoff/oracle.hpp"
#include "kirchhoff/verify.hpp"

using namespace kirchhoff;
using std::numbers::pi;

namespace {

struct Setup {
    DiscreteLaplacian op = build_operators(DomainSpec::interval(1.0, 255));
    Coefficient alpha = Coefficient::constant(op, 1.0);
    Nonlinearity f = Nonlinearity::power(0.5);
    double lambda1 = principal_eigenvalue(op, 1e-12).value;
};

const Setup& setup() {
    static const Setup s;
    return s;
}

} // namespace

TEST(AprioriBound, UnitIntervalClosedForm) {
    // [(4/3)^2 pi^{-3}]^2 = (256/81) pi^{-6}
    EXPECT_NEAR(apriori_bound(0.5, 1.0, 1.0, pi * pi), 256.0 / 81.0 * std::pow(pi, -6.0), 1e-17);
    EXPECT_LT(kGoldenT1Half, 256.0 / 81.0 * std::pow(pi, -6.0));
}

TEST(AprioriBound, HighPrecisionOracleAtQ09) {
    using big = boost::multiprecision::cpp_dec_float_50;
    const double q = 0.9, ess = 2.5, integral = 1.7, lambda1 = 9.7;
    const big bq(9);
    const big qq = bq / 10;
    const big inner = pow(big(2) / (qq + 1), 2) * pow(big(ess) / big(lambda1), qq + 1);
    const big oracle = pow(inner, 1 / (1 - qq)) * big(integral);
    // exponents rearranged: (2/(q+1))^{2/(1-q)} (ess/lambda1)^{(q+1)/(1-q)} int alpha
    const big symbolic = pow(big(2) / big("1.9"), 20) * pow(big(ess) / big(lambda1), 19) * big(integral);
    EXPECT_LT(abs(oracle - symbolic) / symbolic, big("1e-40"));
    const double got = apriori_bound(q, ess, integral, lambda1);
    EXPECT_NEAR(got, oracle.convert_to<double>(), 1e-12 * got);
}

TEST(CheckApriori, HoldsOnEveryBranch) {
    const auto& s = setup();
    const auto base = solve_frozen(s.op, s.alpha, s.f, 1.0);
    for (const auto& b : {KirchhoffBranch::tan(1), KirchhoffBranch::tan(3), KirchhoffBranch::log(),
                          KirchhoffBranch::affine(1.0, 0.0), KirchhoffBranch::singular_power(1.0, 0.5)}) {
        const auto sol = solve_t_equation(s.op, s.alpha, s.f, b, {}, &base);
        const auto c = check_apriori(sol, s.alpha, 0.5, s.lambda1);
        EXPECT_TRUE(c.ok) << b.name();
        EXPECT_NEAR(c.lhs, base.phi, 1e-8 * base.phi);
        EXPECT_LT(c.ratio(), 1.0);
    }
}

TEST(CheckApriori, RejectsBadInputs) {
    const auto& s = setup();
    const auto sol = solve_t_equation(s.op, s.alpha, s.f, KirchhoffBranch::tan(1));
    EXPECT_THROW(check_apriori(sol, s.alpha, 1.0, s.lambda1), Error);
    EXPECT_THROW(check_apriori(sol, s.alpha, 0.5, 0.0), Error);
    // a huge lambda_1 shrinks the bound below the lhs
    EXPECT_FALSE(check_apriori(sol, s.alpha, 0.5, 1e6).ok);
}

TEST(CheckMinimization, DefaultDataPasses) {
    const auto& s = setup();
    const auto sol = solve_t_equation(s.op, s.alpha, s.f, KirchhoffBranch::tan(1));
    const auto m = check_minimization(sol, s.op, s.alpha, s.f, 5, 1e-8);
    EXPECT_TRUE(m.ok);
    EXPECT_LE(m.spread, 1e-8);
    EXPECT_LT(m.value_at_solution, 0.0);
    EXPECT_GT(m.worst_margin, 0.0);
    EXPECT_EQ(m.perturbations, 200);
}

TEST(CheckMinimization, ValueAtZeroAndScaledSolution) {
    const auto& s = setup();
    const auto sol = solve_t_equation(s.op, s.alpha, s.f, KirchhoffBranch::tan(2));
    const double at_u = frozen_functional(s.op, s.alpha, s.f, sol.lam_tilde, sol.u);
    EXPECT_EQ(frozen_functional(s.op, s.alpha, s.f, sol.lam_tilde, GridFunction(s.op.spec())), 0.0);
    EXPECT_LT(at_u, 0.0);
    GridFunction scaled = sol.u;
    for (double& v : scaled.values) v *= 1.01;
    EXPECT_GT(frozen_functional(s.op, s.alpha, s.f, sol.lam_tilde, scaled), at_u);
    // the functional is (1/2) K Phi - int alpha F(u+)
    const double direct = 0.5 * sol.lam_tilde * sol.t_tilde - 0.5 * functional_J(s.op, s.alpha, s.f, sol.u);
    EXPECT_NEAR(at_u, direct, 1e-10 * std::abs(at_u));
}

TEST(CheckMinimization, WrongCandidateFails) {
    const auto& s = setup();
    auto sol = solve_t_equation(s.op, s.alpha, s.f, KirchhoffBranch::tan(1));
    for (double& v : sol.u.values) v *= 1.05;
    EXPECT_FALSE(check_minimization(sol, s.op, s.alpha, s.f, 5, 1e-8).ok);
    EXPECT_THROW(check_minimization(sol, s.op, s.alpha, s.f, 4, 1e-8), Error);
}

TEST(CheckPositivityLocalization, Cases) {
    const auto& s = setup();
    const auto sol = solve_t_equation(s.op, s.alpha, s.f, KirchhoffBranch::tan(1));
    const auto ok = check_positivity_localization(sol);
    EXPECT_TRUE(ok.ok());
    EXPECT_GT(sol.t_tilde, 0.0);
    EXPECT_LT(sol.t_tilde, pi / 2.0);

    auto negated = sol;
    for (double& v : negated.u.values) v = -v;
    EXPECT_FALSE(check_positivity_localization(negated).positivity_ok);

    auto at_sup = sol;
    at_sup.t_tilde = at_sup.branch.upper();
    EXPECT_FALSE(check_positivity_localization(at_sup).localization_ok);
}

TEST(VerifySolution, ReportIsConsistent) {
    const auto& s = setup();
    const auto sol = solve_t_equation(s.op, s.alpha, s.f, KirchhoffBranch::log());
    const auto r = verify_solution(sol, s.op, s.alpha, s.f);
    EXPECT_TRUE(r.ok()) << r.notes;
    EXPECT_EQ(r.apriori_ok, r.apriori_lhs <= r.apriori_rhs * (1.0 + 1e-8));
    EXPECT_EQ(r.minimization_ok, r.minimization_margin > 0.0 && r.multi_start_spread <= 1e-8);
    EXPECT_NEAR(r.lambda1_continuum, pi * pi, 1e-14);
    EXPECT_LT(r.lambda1_discrete, r.lambda1_continuum);
    EXPECT_TRUE(r.notes.empty());
}

TEST(CrossBranchSurvey, TanBranchesIncreaseWithSharedLhs) {
    const auto& s = setup();
    const auto table = cross_branch_survey(s.op, s.alpha, s.f,
                                           {KirchhoffBranch::tan(1), KirchhoffBranch::tan(2), KirchhoffBranch::tan(3)},
                                           s.lambda1);
    ASSERT_EQ(table.rows.size(), 3u);
    EXPECT_TRUE(table.all_ok());
    EXPECT_LT(table.rows[0].t_tilde, table.rows[1].t_tilde);
    EXPECT_LT(table.rows[1].t_tilde, table.rows[2].t_tilde);
    EXPECT_TRUE(table.tan_distinct);
    EXPECT_TRUE(table.lhs_invariant);
    EXPECT_LE(table.lhs_spread, 1e-8);
    for (const auto& r : table.rows) EXPECT_LT(r.apriori_lhs, r.apriori_rhs);
}

TEST(CrossBranchSurvey, MixedFamiliesShareLhs) {
    const auto& s = setup();
    const auto table = cross_branch_survey(
        s.op, s.alpha, s.f, {KirchhoffBranch::affine(1.0, 0.0), KirchhoffBranch::log(), KirchhoffBranch::tan(1)},
        s.lambda1);
    EXPECT_TRUE(table.all_ok());
    EXPECT_TRUE(table.lhs_invariant);
    for (const auto& r : table.rows) EXPECT_NEAR(r.apriori_lhs, table.phi_u1, 1e-8 * table.phi_u1);
}

TEST(CrossBranchSurvey, EmptyAndFailingRows) {
    const auto& s = setup();
    EXPECT_TRUE(cross_branch_survey(s.op, s.alpha, s.f, {}, s.lambda1).rows.empty());
    const auto table = cross_branch_survey(
        s.op, s.alpha, s.f,
        {KirchhoffBranch::affine(0.0, 1.0), KirchhoffBranch::singular_power(1e-18, 0.5), KirchhoffBranch::tan(1)},
        s.lambda1);
    ASSERT_EQ(table.rows.size(), 3u);
    EXPECT_EQ(table.rows[0].status, "INVALID");
    EXPECT_EQ(table.rows[1].status, "NoCrossing");
    EXPECT_EQ(table.rows[2].status, "OK");
    EXPECT_FALSE(table.all_ok());
    EXPECT_TRUE(table.lhs_invariant);
}

TEST(CheckApriori, AcceptanceMatrix) {
    const auto& s = setup();
    for (double q : {0.25, 0.5, 0.75}) {
        const auto f = Nonlinearity::power(q);
        for (const auto& alpha : {Coefficient::constant(s.op, 1.0), Coefficient::linear_ramp(s.op, 1.0, 1.0)}) {
            const auto base = solve_frozen(s.op, alpha, f, 1.0);
            for (const auto& b : {KirchhoffBranch::tan(1), KirchhoffBranch::tan(2), KirchhoffBranch::tan(3),
                                  KirchhoffBranch::log(), KirchhoffBranch::affine(1.0, 0.0)}) {
                const auto sol = solve_t_equation(s.op, alpha, f, b, {}, &base);
                const auto c = check_apriori(sol, alpha, q, s.lambda1);
                EXPECT_TRUE(c.ok) << q << " " << b.name();
                EXPECT_LT(c.ratio(), 1.0) << q << " " << b.name();
            }
        }
    }
}
