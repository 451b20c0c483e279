#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fbcrs/error.h"
#include "fbcrs/instances.h"
#include "fbcrs/lp_si.h"
#include "fbcrs/single_unit.h"

namespace fbcrs {
namespace {

constexpr double kTol = 1e-9;

// For n = 2 the LP reduces to max over (a, b) in [0, 1]^2 of
// min((a + 1 - x2 b) / 2, (1 - x1 a + b) / 2) with c_f = (a, 1 - x1 a),
// c_b = (1 - x2 b, b). Grid search is an independent oracle.
double lpopt_two_by_grid(double x1, double x2) {
  const int steps = 2000;
  double best = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double a = static_cast<double>(i) / steps;
    for (int j = 0; j <= steps; ++j) {
      const double b = static_cast<double>(j) / steps;
      best = std::max(best, std::min((a + 1.0 - x2 * b) / 2.0, (1.0 - x1 * a + b) / 2.0));
    }
  }
  return best;
}

SingleUnitInstance uniform(std::size_t n, double rho) {
  return SingleUnitInstance(std::vector<double>(n, rho / static_cast<double>(n)));
}

TEST(Alpha0, KnownValues) {
  EXPECT_DOUBLE_EQ(alpha_0(0.0), 1.0);
  EXPECT_NEAR(alpha_0(1.0), 1.0 / (1.0 + std::exp(-0.5)), 1e-15);
  EXPECT_NEAR(alpha_0(1.0), 0.622459331202, 1e-12);
  EXPECT_GT(alpha_0(1.0), 0.622);
  EXPECT_NEAR(alpha_0(2.0), 1.0 / (2.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(alpha_0(2.0), 0.422318798252, 1e-12);
}

TEST(Alpha0, KeyIdentity) {
  for (double rho : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double a = alpha_0(rho);
    EXPECT_NEAR(1.0 - a * rho, a * std::exp(-rho / 2.0), 1e-12) << rho;
  }
}

TEST(Gamma, PointValues) {
  EXPECT_NEAR(gamma(1.0, 1.0), alpha_0(1.0) / 2.0, 1e-15);
  EXPECT_NEAR(gamma(1.0, 1.0), 0.31123, 1e-5);
  EXPECT_NEAR(gamma(0.5, 1.0), 0.18877, 1e-5);
  for (double rho : {0.5, 1.0, 2.0}) {
    const double a = alpha_0(rho);
    EXPECT_NEAR(gamma(rho / 2.0, rho), rho * a * std::exp(-rho / 2.0) / 2.0, 1e-12);
    EXPECT_NEAR(gamma(rho / 2.0, rho), rho * (1.0 - a * rho) / 2.0, 1e-12);
  }
}

TEST(Gamma, ValuePlusTailIntegralIsConstant) {
  for (double rho : {0.5, 1.0, 3.0}) {
    for (int k = 0; k <= 10; ++k) {
      const double z = rho / 2.0 + rho / 2.0 * k / 10.0;
      EXPECT_NEAR(gamma(z, rho) + gamma_integral(z, rho, rho), rho * alpha_0(rho) / 2.0, 1e-12);
    }
  }
}

TEST(Gamma, IntegralMatchesSimpson) {
  const double rho = 1.3;
  const double a = 0.7;
  const double b = 1.2;
  const int m = 2000;
  const double h = (b - a) / m;
  double s = gamma(a, rho) + gamma(b, rho);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * gamma(a + k * h, rho);
  EXPECT_NEAR(gamma_integral(a, b, rho), s * h / 3.0, 1e-12);
}

TEST(Gamma, OneLipschitzAndIncreasing) {
  for (double rho : {0.5, 1.0, 2.0}) {
    double prev = gamma(rho / 2.0, rho);
    for (int k = 1; k <= 200; ++k) {
      const double z = rho / 2.0 + rho / 2.0 * k / 200.0;
      const double g = gamma(z, rho);
      EXPECT_GE(g, prev);
      EXPECT_LE(g - prev, rho / 400.0 + 1e-15);
      prev = g;
    }
  }
}

TEST(Gamma, DomainIsChecked) {
  EXPECT_THROW(gamma(0.1, 1.0), InputError);
  EXPECT_THROW(gamma(1.5, 1.0), InputError);
}

TEST(SolveLpSi, SingleElement) {
  const LpSiSolution sol = solve_lp_si_full(SingleUnitInstance({1.0}));
  EXPECT_NEAR(sol.lpopt, 1.0, kTol);
  EXPECT_NEAR(sol.plan.c_forward[0], 1.0, kTol);
  EXPECT_NEAR(sol.plan.c_backward[0], 1.0, kTol);
}

TEST(SolveLpSi, TwoHalves) {
  const SingleUnitInstance inst({0.5, 0.5});
  const LpSiSolution sol = solve_lp_si_full(inst);
  EXPECT_NEAR(sol.lpopt, 0.75, kTol);
  EXPECT_NEAR(lpopt_two_by_grid(0.5, 0.5), 0.75, 1e-3);
  EXPECT_NEAR(sol.plan.c_forward[0], 1.0, kTol);
  EXPECT_NEAR(sol.plan.c_forward[1], 0.5, kTol);
  EXPECT_NEAR(sol.plan.c_backward[0], 0.5, kTol);
  EXPECT_NEAR(sol.plan.c_backward[1], 1.0, kTol);
}

TEST(SolveLpSi, TwoElementsAgreeWithGridOracle) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 12; ++t) {
    const double x1 = u(gen);
    const double x2 = u(gen) * (1.0 - x1);
    const LpSiSolution sol = solve_lp_si_full(SingleUnitInstance({x1, x2}));
    EXPECT_NEAR(sol.lpopt, lpopt_two_by_grid(x1, x2), 1e-3) << x1 << " " << x2;
  }
}

TEST(SolveLpSi, Uniform101IsSandwiched) {
  const double lpopt = solve_lp_si_full(uniform(101, 1.0)).lpopt;
  EXPECT_GE(lpopt, alpha_0(1.0) - kTol);
  EXPECT_LE(lpopt, alpha_0(1.0) + 3.0 / 101.0 + kTol);
}

TEST(SolveLpSi, DualMatchesPrimal) {
  for (std::size_t n : {3, 8, 25}) {
    const LpSiSolution sol = solve_lp_si_full(uniform(n, 0.9));
    EXPECT_NEAR(sol.dual_objective, sol.lpopt, kTol);
    EXPECT_LE(sol.dual_max_violation, kTol);
  }
}

TEST(SolveLpSi, RandomInstancesAreFeasibleAndBeatTheClosedForm) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + t % 9;
    std::vector<double> x(n);
    double total = 0.0;
    for (double& v : x) total += (v = u(gen));
    const double scale = u(gen) / total;
    for (double& v : x) v *= scale;
    const SingleUnitInstance inst(x);
    const LpSiSolution sol = solve_lp_si_full(inst);
    EXPECT_LE(single_unit_violation(sol.plan, inst), kTol);
    EXPECT_NEAR(sol.plan.objective(), sol.lpopt, kTol);
    EXPECT_GE(sol.lpopt, closed_form_plan(inst).objective() - kTol);
    for (Order order : kBothOrders) {
      const Permutation perm(order, n);
      double used = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = perm.element_at(k);
        used += inst.x(i) * sol.plan.c(order)[i];
      }
      EXPECT_LE(used, 1.0 + kTol);
    }
    EXPECT_NEAR(solve_lp_si_full(inst.reversed()).lpopt, sol.lpopt, kTol);
  }
}

TEST(SolveLpSi, SplittingNeverHelps) {
  std::mt19937_64 gen(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + t % 6;
    std::vector<double> x(n);
    for (double& v : x) v = u(gen) / static_cast<double>(n);
    const SingleUnitInstance inst(x);
    const std::size_t k = static_cast<std::size_t>(u(gen) * n) % n;
    EXPECT_LE(solve_lp_si_full(split_element(inst, k)).lpopt,
              solve_lp_si_full(inst).lpopt + kTol);
  }
}

TEST(SingleUnitViolation, FlagsBrokenPlans) {
  const SingleUnitInstance inst({0.5, 0.5});
  SelectionPlan ok{{1.0, 0.5}, {0.5, 1.0}};
  EXPECT_LE(single_unit_violation(ok, inst), 0.0);
  SelectionPlan bad{{1.0, 0.6}, {0.5, 1.0}};
  EXPECT_NEAR(single_unit_violation(bad, inst), 0.1, 1e-12);
}

TEST(DualCertificate, ThreeElements) {
  const DualCertificate cert = dual_certificate_uniform(3, 1.0);
  ASSERT_EQ(cert.size(), 3u);
  EXPECT_NEAR(cert.xi[0], 0.62246, 1e-5);
  EXPECT_NEAR(cert.xi[1], 1.75508, 1e-5);
  EXPECT_NEAR(cert.xi[2], 0.62246, 1e-5);
  EXPECT_NEAR(cert.objective(), 1.12585, 1e-5);
  EXPECT_LE(cert.objective(), alpha_0(1.0) + 1.0);
  const DualFeasibilityReport rep = dual_feasibility(cert, 1.0);
  EXPECT_TRUE(rep.feasible());
  EXPECT_LE(rep.max_violation, 1e-9);
}

TEST(DualCertificate, LargeNIsTight) {
  const DualCertificate cert = dual_certificate_uniform(2001, 1.0);
  EXPECT_LE(cert.objective(), alpha_0(1.0) + 3.0 / 2001.0);
  EXPECT_TRUE(dual_feasibility(cert, 1.0).feasible());
}

TEST(DualCertificate, ZeroCertificateMissesTheXiBudget) {
  DualCertificate zero;
  zero.rho = 1.0;
  zero.xi.assign(5, 0.0);
  zero.y_forward.assign(5, 0.0);
  zero.y_backward.assign(5, 0.0);
  const DualFeasibilityReport rep = dual_feasibility(zero, 1.0);
  EXPECT_NEAR(rep.xi_slack_violation, 1.0, 1e-15);
  EXPECT_FALSE(rep.feasible());
}

TEST(DualCertificate, WeakDualityOnUniformInstances) {
  for (double rho : {0.3, 1.0, 2.5}) {
    for (std::size_t n : {3, 5, 21}) {
      const DualCertificate cert = dual_certificate_uniform(n, rho);
      EXPECT_TRUE(dual_feasibility(cert, rho).feasible()) << n << " " << rho;
      const double lpopt = solve_lp_si_full(uniform(n, rho)).lpopt;
      EXPECT_LE(lpopt, cert.objective() + kTol);
      EXPECT_LE(cert.objective(), alpha_0(rho) + (rho + 2.0) / static_cast<double>(n) + kTol);
    }
  }
}

TEST(DualCertificate, EvenSizeIsRejected) {
  EXPECT_THROW(dual_certificate_uniform(4, 1.0), InputError);
}

}  // namespace
}  // namespace fbcrs
