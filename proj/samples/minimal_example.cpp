// Solves the q = 1/2 problem on (0,1) for the first three tangent branches.

#include <cstdio>

#include "kirchhoff/kirchhoff.hpp"

int main() {
    using namespace kirchhoff;
    const auto op = build_operators(DomainSpec::interval(1.0, 256));
    const auto alpha = Coefficient::constant(op, 1.0);
    const auto f = Nonlinearity::power(0.5);
    for (int k = 1; k <= 3; ++k) {
        const auto sol = solve_t_equation(op, alpha, f, KirchhoffBranch::tan(k));
        std::printf("tan:%d  t = %.12f  lambda = %.12f  max u = %.6e\n", k, sol.t_tilde, sol.lam_tilde, sol.u.max());
    }
}
