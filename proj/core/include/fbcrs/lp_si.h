#pragma once

#include <cstddef>
#include <vector>

#include "fbcrs/instances.h"
#include "fbcrs/simplex.h"

namespace fbcrs {

// Conditional acceptance probabilities c_sigma(i) = Pr[accept i | i active,
// order sigma] for both arrival orders.
struct SelectionPlan {
  std::vector<double> c_forward;
  std::vector<double> c_backward;

  std::size_t size() const { return c_forward.size(); }
  const std::vector<double>& c(Order order) const {
    return order == Order::kForward ? c_forward : c_backward;
  }
  // Selection guarantee min_i (c_f(i) + c_b(i)) / 2.
  double objective() const;
  double pair_mean(std::size_t i) const {
    return (c_forward[i] + c_backward[i]) / 2.0;
  }
};

// Largest value of c_sigma(i) - (1 - sum_{j before i} x_j c_sigma(j)) over
// all (i, sigma), plus out-of-range entries; <= 0 means feasible.
double single_unit_violation(const SelectionPlan& plan,
                             const SingleUnitInstance& inst);

// e^{rho/2} / (1 + e^{rho/2} rho).
double alpha_0(double rho);

// rho e^{z - rho/2} / (2 (1 + e^{rho/2} rho)) on [rho/2, rho].
double gamma(double z, double rho);
// Closed-form integral of gamma over [a, b] within [rho/2, rho].
double gamma_integral(double a, double b, double rho);

struct LpSiSolution {
  SelectionPlan plan;
  double lpopt = 0.0;
  // Terminal-basis multipliers for the beta-rows and the two families of
  // acceptance rows, in the unscaled dual of the beta formulation.
  std::vector<double> dual_beta;
  std::vector<double> dual_forward;
  std::vector<double> dual_backward;
  double dual_objective = 0.0;
  double dual_max_violation = 0.0;
  std::size_t iterations = 0;
};

// Solves the instance-optimal LP with an auxiliary variable beta:
//   max beta  s.t.  beta <= (c_f(i) + c_b(i))/2,
//                   c_sigma(i) + sum_{j before i} x_j c_sigma(j) <= 1.
// Throws SolverError if the simplex does not converge or returns a plan
// that violates feasibility by more than 1e-9.
LpSiSolution solve_lp_si_full(const SingleUnitInstance& inst,
                              const SimplexOptions& options = {});

inline SelectionPlan solve_lp_si(const SingleUnitInstance& inst) {
  return solve_lp_si_full(inst).plan;
}

// Explicit dual solution (xi, y_f, y_b) for the uniform instance
// x_i = rho/N, in the N-scaled form used for the weak-duality bound.
struct DualCertificate {
  double rho = 0.0;
  std::vector<double> xi;
  std::vector<double> y_forward;
  std::vector<double> y_backward;

  std::size_t size() const { return xi.size(); }
  // sum_i (y_f(i) + y_b(i)) / N
  double objective() const;
};

// Requires N odd (N = 2n + 1).
DualCertificate dual_certificate_uniform(std::size_t N, double rho);

struct DualFeasibilityReport {
  // max over (i, sigma) of max(0, xi(i)/2 - y_sigma(i) - sum_{j after i} rho y_sigma(j)/N)
  double max_violation = 0.0;
  std::size_t worst_index = 0;
  Order worst_order = Order::kForward;
  // max(0, 1 - sum_i xi(i)/N)
  double xi_slack_violation = 0.0;
  // Most negative entry of (xi, y_f, y_b), reported as a positive number.
  double negativity = 0.0;

  bool feasible(double tol = 1e-9) const {
    return max_violation <= tol && xi_slack_violation <= 1e-12 && negativity <= tol;
  }
};

DualFeasibilityReport dual_feasibility(const DualCertificate& cert, double rho);

}  // namespace fbcrs
