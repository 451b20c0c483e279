#include "fbcrs/lp_si.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbcrs/error.h"

namespace fbcrs {

namespace {

constexpr double kFeasibilityTol = 1e-9;

// 1 + e^{rho/2} rho, the shared denominator of alpha_0, phi and gamma.
double denominator(double rho) { return 1.0 + std::exp(rho / 2.0) * rho; }

}  // namespace

double SelectionPlan::objective() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) best = std::min(best, pair_mean(i));
  return size() == 0 ? 0.0 : best;
}

double single_unit_violation(const SelectionPlan& plan,
                             const SingleUnitInstance& inst) {
  if (plan.size() != inst.size() || plan.c_backward.size() != inst.size()) {
    throw InputError("plan and instance sizes differ");
  }
  const std::size_t n = inst.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& c = plan.c(order);
    double consumed = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      worst = std::max(worst, c[i] - (1.0 - consumed));
      worst = std::max(worst, -c[i]);
      worst = std::max(worst, c[i] - 1.0);
      consumed += inst.x(i) * c[i];
    }
  }
  return worst;
}

double alpha_0(double rho) {
  if (!(rho >= 0.0)) throw InputError("alpha_0 requires rho >= 0");
  return std::exp(rho / 2.0) / denominator(rho);
}

double gamma(double z, double rho) {
  constexpr double kSlack = 1e-12;
  if (!(z >= rho / 2.0 - kSlack && z <= rho + kSlack)) {
    throw InputError("gamma is defined on [rho/2, rho]");
  }
  return rho * std::exp(z - rho / 2.0) / (2.0 * denominator(rho));
}

double gamma_integral(double a, double b, double rho) {
  // gamma' = gamma, so the integral is gamma(b) - gamma(a).
  const double scale = rho / (2.0 * denominator(rho));
  return scale * std::exp(a - rho / 2.0) * std::expm1(b - a);
}

LpSiSolution solve_lp_si_full(const SingleUnitInstance& inst,
                              const SimplexOptions& options) {
  const std::size_t n = inst.size();
  // Variables: c_f(0..n-1), c_b(0..n-1), beta.
  const std::size_t vars = 2 * n + 1;
  const std::size_t beta = 2 * n;
  DenseLp lp;
  lp.num_vars = vars;
  lp.objective.assign(vars, 0.0);
  lp.objective[beta] = 1.0;
  lp.rows.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(vars, 0.0);
    row[beta] = 1.0;
    row[i] = -0.5;
    row[n + i] = -0.5;
    lp.rows.push_back(std::move(row));
    lp.rhs.push_back(0.0);
  }
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const std::size_t offset = order == Order::kForward ? 0 : n;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(vars, 0.0);
      row[offset + i] = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (perm.before(j, i)) row[offset + j] = inst.x(j);
      }
      lp.rows.push_back(std::move(row));
      lp.rhs.push_back(1.0);
    }
  }

  const SimplexResult res = solve_dense_lp(lp, options);

  LpSiSolution out;
  out.iterations = res.iterations;
  out.plan.c_forward.assign(res.primal.begin(), res.primal.begin() + n);
  out.plan.c_backward.assign(res.primal.begin() + n, res.primal.begin() + 2 * n);
  for (double& c : out.plan.c_forward) c = std::min(1.0, c);
  for (double& c : out.plan.c_backward) c = std::min(1.0, c);
  out.lpopt = out.plan.objective();

  const double violation = single_unit_violation(out.plan, inst);
  if (violation > kFeasibilityTol) {
    std::ostringstream msg;
    msg << "simplex returned an infeasible plan (violation " << violation << ")";
    throw SolverError(msg.str());
  }
  if (std::abs(out.lpopt - res.objective) > kFeasibilityTol) {
    std::ostringstream msg;
    msg << "simplex objective " << res.objective << " disagrees with plan value "
        << out.lpopt;
    throw SolverError(msg.str());
  }

  out.dual_beta.assign(res.dual.begin(), res.dual.begin() + n);
  out.dual_forward.assign(res.dual.begin() + n, res.dual.begin() + 2 * n);
  out.dual_backward.assign(res.dual.begin() + 2 * n, res.dual.end());

  // Dual of the beta formulation:
  //   min sum u  s.t.  sum_i w_i >= 1,
  //   u_sigma(i) + x_i sum_{k after i} u_sigma(k) >= w_i / 2.
  double dual_obj = 0.0;
  double worst = std::max(0.0, 1.0 - compensated_sum(out.dual_beta));
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& u = order == Order::kForward ? out.dual_forward : out.dual_backward;
    double later = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t i = perm.element_at(k);
      worst = std::max(worst, out.dual_beta[i] / 2.0 - u[i] - inst.x(i) * later);
      later += u[i];
      dual_obj += u[i];
    }
  }
  out.dual_objective = dual_obj;
  out.dual_max_violation = worst;
  return out;
}

double DualCertificate::objective() const {
  std::vector<double> terms;
  terms.reserve(2 * size());
  for (std::size_t i = 0; i < size(); ++i) {
    terms.push_back(y_forward[i]);
    terms.push_back(y_backward[i]);
  }
  return compensated_sum(terms) / static_cast<double>(size());
}

DualCertificate dual_certificate_uniform(std::size_t N, double rho) {
  if (N % 2 == 0) {
    throw InputError("dual_certificate_uniform is only defined for odd N");
  }
  if (!(rho >= 0.0)) throw InputError("dual_certificate_uniform requires rho >= 0");
  const std::size_t half = N / 2;  // element index of the middle (n+1 in 1-based terms)
  const double Nd = static_cast<double>(N);
  const double a0 = alpha_0(rho);

  DualCertificate cert;
  cert.rho = rho;
  cert.xi.assign(N, rho * a0);
  cert.xi[half] = (1.0 - rho * a0 * (Nd - 1.0) / Nd) * Nd;
  const double spike = cert.xi[half] / 2.0 + 0.5;

  cert.y_forward.assign(N, 0.0);
  cert.y_backward.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double one_based = static_cast<double>(i + 1);
    if (i == half) {
      cert.y_forward[i] = spike;
      cert.y_backward[i] = spike;
    } else if (i > half) {
      cert.y_forward[i] = gamma(rho * one_based / Nd, rho);
    } else {
      cert.y_backward[i] = gamma(rho - rho * (one_based - 1.0) / Nd, rho);
    }
  }
  return cert;
}

DualFeasibilityReport dual_feasibility(const DualCertificate& cert, double rho) {
  const std::size_t N = cert.size();
  if (cert.y_forward.size() != N || cert.y_backward.size() != N || N == 0) {
    throw InputError("malformed dual certificate");
  }
  const double Nd = static_cast<double>(N);
  DualFeasibilityReport report;
  for (Order order : kBothOrders) {
    const Permutation perm(order, N);
    const auto& y = order == Order::kForward ? cert.y_forward : cert.y_backward;
    double later = 0.0;
    for (std::size_t k = N; k-- > 0;) {
      const std::size_t i = perm.element_at(k);
      const double gap = cert.xi[i] / 2.0 - y[i] - rho * later / Nd;
      if (gap > report.max_violation) {
        report.max_violation = gap;
        report.worst_index = i;
        report.worst_order = order;
      }
      later += y[i];
    }
  }
  report.xi_slack_violation = std::max(0.0, 1.0 - compensated_sum(cert.xi) / Nd);
  for (std::size_t i = 0; i < N; ++i) {
    report.negativity = std::max({report.negativity, -cert.xi[i],
                                  -cert.y_forward[i], -cert.y_backward[i]});
  }
  return report;
}

}  // namespace fbcrs
