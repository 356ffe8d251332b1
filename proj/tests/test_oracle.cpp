#include <cmath>

#include <gtest/gtest.h>

#include "kirchhoff/oracle.hpp"
#include "kirchhoff/sublinear.hpp"

using namespace kirchhoff;

TEST(OracleShoot, ReproducesGoldenValue) {
    const auto r = oracle_shoot(0.5, 1.0, 1.0);
    EXPECT_NEAR(r.t1, kGoldenT1Half, 1e-12);
    EXPECT_LT(std::abs(r.end_value), 1e-10);
    EXPECT_GT(r.slope, 0.0);
}

TEST(OracleShoot, AlphaScaling) {
    // u -> c^{1/(1-q)} u maps -u'' = u^q onto -u'' = c u^q
    for (double q : {0.25, 0.5, 0.75}) {
        const double base = oracle_shoot(q, 1.0, 1.0).t1;
        const double scaled = oracle_shoot(q, 3.0, 1.0).t1;
        EXPECT_NEAR(scaled / base, std::pow(3.0, 2.0 / (1.0 - q)), 1e-8 * scaled / base) << q;
    }
}

TEST(OracleShoot, LengthScaling) {
    // u_L(x) = L^{2/(1-q)} u(x/L), hence int u_L'^2 = L^{(3+q)/(1-q)} int u'^2
    for (double q : {0.25, 0.5}) {
        const double base = oracle_shoot(q, 1.0, 1.0).t1;
        for (double L : {0.5, 2.0}) {
            const double ratio = oracle_shoot(q, 1.0, L).t1 / base;
            EXPECT_NEAR(ratio, std::pow(L, (3.0 + q) / (1.0 - q)), 1e-8 * ratio) << q << " " << L;
        }
    }
}

TEST(OracleShoot, AgreesWithDiscreteSolve) {
    const auto op = build_operators(DomainSpec::interval(1.0, 511));
    const auto coeff = Coefficient::constant(op, 1.0);
    const auto u1 = solve_frozen(op, coeff, Nonlinearity::power(0.75), 1.0);
    const double ref = oracle_shoot(0.75, 1.0, 1.0).t1;
    EXPECT_LT(std::abs(u1.phi - ref) / ref, 1e-4);
}

TEST(OracleShoot, RejectsBadArguments) {
    EXPECT_THROW(oracle_shoot(0.5, 1.0, 1.0, 4095), Error);
    EXPECT_THROW(oracle_shoot(1.0, 1.0, 1.0), Error);
    EXPECT_THROW(oracle_shoot(0.5, 0.0, 1.0), Error);
    EXPECT_THROW(oracle_shoot(0.5, 1.0, -1.0), Error);
    EXPECT_NO_THROW(oracle_shoot(0.5, 1.0, 1.0, 4096));
}
