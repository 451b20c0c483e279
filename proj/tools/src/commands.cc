#include "fbcrs/cli/commands.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "fbcrs/cli/json_io.h"
#include "fbcrs/error.h"
#include "fbcrs/knapsack.h"
#include "fbcrs/lp_si.h"
#include "fbcrs/rationing.h"
#include "fbcrs/single_unit.h"

namespace fbcrs::cli {

namespace {

using nlohmann::json;

constexpr double kLpTol = 1e-9;
constexpr double kExactTol = 1e-10;
constexpr double kCiMultiple = 3.0;

template <typename T>
const T& expect_kind(const Instance& inst, const char* want) {
  if (const T* v = std::get_if<T>(&inst)) return *v;
  throw InputError(std::string("expected a ") + want + " instance, got " + kind_name(inst));
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

double round12(double v) { return std::round(v * 1e12) / 1e12; }

SelectionPlan single_unit_plan(const SingleUnitInstance& inst, const std::string& source) {
  if (source == "lp") return solve_lp_si(inst);
  if (source == "closed") return closed_form_plan(inst);
  SelectionPlan plan = plan_from_json(read_json_file(source));
  if (plan.size() != inst.size()) throw InputError("plan and instance sizes differ");
  return plan;
}

SelectionPlan knapsack_plan(const KnapsackInstance& inst, const std::string& source) {
  if (source == "closed") return closed_form_knapsack_plan(inst);
  if (source == "lp") throw InputError("the LP plan is single-unit only; use --plan closed");
  SelectionPlan plan = plan_from_json(read_json_file(source));
  if (plan.size() != inst.size()) throw InputError("plan and instance sizes differ");
  return plan;
}

RationingMode parse_mode(const std::string& mode) {
  if (mode == "exact") return RationingMode::kExact;
  if (mode == "mc") return RationingMode::kMonteCarlo;
  throw InputError("unknown mode '" + mode + "'");
}

}  // namespace

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  const char* env = std::getenv("FBCRS_SEED");
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t seed = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto res = std::from_chars(env, end, seed);
  if (res.ec != std::errc() || res.ptr != end) {
    throw InputError(std::string("FBCRS_SEED='") + env + "' is not an unsigned integer");
  }
  return seed;
}

Report cmd_constants() {
  Report r;
  r.command = "constants";
  r.table.columns = {"name", "value", "closed_form"};
  const double e = std::numbers::e;
  r.table.add({std::string("adversarial"), round12(0.5), std::string("1/2")});
  r.table.add({std::string("two-order-threshold"), round12((std::sqrt(5.0) - 1.0) / 2.0),
               std::string("(sqrt(5)-1)/2")});
  r.table.add({std::string("fb-crs"), round12(alpha_0(1.0)),
               std::string("1/(1+e^(-1/2))")});
  r.table.add({std::string("random-order"), round12(1.0 - 1.0 / e), std::string("1-1/e")});
  r.table.add({std::string("knapsack-adversarial"), round12(1.0 / (3.0 + std::exp(-2.0))),
               std::string("1/(3+e^(-2))")});
  r.table.add({std::string("knapsack-fb"), round12(1.0 / 3.0), std::string("1/3")});
  r.table.add({std::string("knapsack-fb-upper"), round12(alpha_0(2.0)),
               std::string("e/(1+2e)")});
  r.table.add({std::string("knapsack-random-upper"), round12((1.0 - std::exp(-2.0)) / 2.0),
               std::string("(1-e^(-2))/2")});
  r.summary["decimals"] = 12;
  return r;
}

Report cmd_lp_solve(const LpSolveOptions& opt) {
  const SingleUnitInstance inst =
      expect_kind<SingleUnitInstance>(read_instance(opt.instance), "single_unit");
  const LpSiSolution sol = solve_lp_si_full(inst);
  Report r;
  r.command = "lp-solve";
  const double violation = single_unit_violation(sol.plan, inst);
  r.summary["n"] = inst.size();
  r.summary["rho"] = inst.rho();
  r.summary["lpopt"] = sol.lpopt;
  r.summary["alpha_0"] = alpha_0(inst.rho());
  r.summary["c_f"] = sol.plan.c_forward;
  r.summary["c_b"] = sol.plan.c_backward;
  r.summary["primal_max_violation"] = std::max(0.0, violation);
  r.summary["iterations"] = sol.iterations;
  if (violation > kLpTol) r.flag_violation("primal plan violates the LP constraints");
  if (opt.dual) {
    r.summary["dual_objective"] = sol.dual_objective;
    r.summary["max_violation"] = sol.dual_max_violation;
    r.summary["duality_gap"] = sol.dual_objective - sol.lpopt;
    if (sol.dual_max_violation > kLpTol) r.flag_violation("dual multipliers are infeasible");
    if (std::abs(sol.dual_objective - sol.lpopt) > kLpTol) {
      r.flag_violation("primal and dual objectives disagree");
    }
  }
  r.table.columns = {"element", "x", "c_f", "c_b", "pair_mean"};
  for (std::size_t i = 0; i < inst.size(); ++i) {
    r.table.add({as_int(i), inst.x(i), sol.plan.c_forward[i], sol.plan.c_backward[i],
                 sol.plan.pair_mean(i)});
  }
  return r;
}

Report cmd_simulate_single_unit(const SimulateSingleUnitOptions& opt) {
  const SingleUnitInstance inst =
      expect_kind<SingleUnitInstance>(read_instance(opt.instance), "single_unit");
  const SelectionPlan plan = single_unit_plan(inst, opt.plan);
  const double violation = single_unit_violation(plan, inst);
  if (violation > kLpTol) {
    throw InfeasibleError("plan violates the single-unit constraints by " +
                          format_double(violation));
  }
  const SelectionPlan exact = exact_selection_rates(inst, plan);
  const SingleUnitEstimates est = simulate_single_unit(
      inst, plan, sim::TrialConfig{opt.trials, opt.seed, opt.workers});

  Report r;
  r.command = "simulate-single-unit";
  r.table.columns = {"element",         "x",          "c_f",         "c_b",
                     "empirical_rate",  "ci_low",     "ci_high",     "bound",
                     "exact_f",         "exact_b",    "forward_rate", "forward_ci_low",
                     "forward_ci_high", "backward_rate", "backward_ci_low",
                     "backward_ci_high", "active_count", "within_3hw"};
  double max_exact_error = 0.0;
  std::size_t outside = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    max_exact_error = std::max({max_exact_error, std::abs(exact.c_forward[i] - plan.c_forward[i]),
                                std::abs(exact.c_backward[i] - plan.c_backward[i])});
    const auto pooled = est.pooled[i].interval();
    const auto fwd = est.forward[i].interval();
    const auto bwd = est.backward[i].interval();
    bool within = true;
    if (est.forward[i].count > 0) {
      within &= std::abs(est.forward[i].point() - plan.c_forward[i]) <=
                kCiMultiple * fwd.half_width() + kExactTol;
    }
    if (est.backward[i].count > 0) {
      within &= std::abs(est.backward[i].point() - plan.c_backward[i]) <=
                kCiMultiple * bwd.half_width() + kExactTol;
    }
    outside += within ? 0 : 1;
    r.table.add({as_int(i), inst.x(i), plan.c_forward[i], plan.c_backward[i],
                 est.pooled[i].point(), pooled.low, pooled.high, plan.pair_mean(i),
                 exact.c_forward[i], exact.c_backward[i], est.forward[i].point(), fwd.low,
                 fwd.high, est.backward[i].point(), bwd.low, bwd.high,
                 static_cast<std::int64_t>(est.pooled[i].count), within});
  }
  r.summary["n"] = inst.size();
  r.summary["rho"] = inst.rho();
  r.summary["plan"] = opt.plan;
  r.summary["objective"] = plan.objective();
  r.summary["alpha_0"] = alpha_0(inst.rho());
  r.summary["trials"] = opt.trials;
  r.summary["seed"] = opt.seed;
  r.summary["max_exact_error"] = max_exact_error;
  r.summary["inactive_acceptances"] = est.inactive_acceptances;
  r.summary["elements_outside_3hw"] = outside;
  if (max_exact_error > kExactTol) r.flag_violation("exact rates drift from the plan");
  if (est.inactive_acceptances > 0) r.flag_violation("an inactive element was accepted");
  if (outside > 0) r.flag_violation("empirical rates outside 3 half-widths of the plan");
  return r;
}

Report cmd_simulate_knapsack(const SimulateKnapsackOptions& opt) {
  const KnapsackInstance inst =
      expect_kind<KnapsackInstance>(read_instance(opt.instance), "knapsack");
  const SelectionPlan plan = knapsack_plan(inst, opt.plan);
  const KnapsackFeasibilityReport feas = check_knapsack_feasible(plan, inst);
  if (!feas.feasible()) {
    throw InfeasibleError("plan is not a feasible knapsack plan (violation " +
                          format_double(feas.max_violation()) + ")");
  }
  const RationingMode mode = parse_mode(opt.mode);

  Report r;
  r.command = "simulate-knapsack";
  r.table.columns = {"record", "element", "order", "size", "planned", "rate",
                     "ci_low", "ci_high", "half_width", "count", "kind", "b", "lhs", "rhs"};
  r.summary["n"] = inst.size();
  r.summary["total_mu"] = inst.total_mu();
  r.summary["plan"] = opt.plan;
  r.summary["objective"] = plan.objective();
  r.summary["mode"] = opt.mode;
  if (!feas.zero_first_rate.empty()) {
    r.warnings.push_back("first-arrival rate is 0; exponential constraint taken as its limit");
  }

  std::optional<KnapsackExactResult> exact;
  if (mode == RationingMode::kExact || opt.monitor) {
    KnapsackExactOptions eo;
    eo.monitor = opt.monitor;
    exact = run_knapsack_exact(inst, plan, eo);
  }

  if (mode == RationingMode::kExact) {
    for (Order order : kBothOrders) {
      for (std::size_t i = 0; i < inst.size(); ++i) {
        const auto& atoms = inst.law(i).atoms();
        for (std::size_t a = 0; a < atoms.size(); ++a) {
          r.table.add({std::string("rate"), as_int(i), std::string(to_string(order)),
                       atoms[a].value, plan.c(order)[i], exact->rates(order)[i][a], {}, {}, {},
                       {}, {}, {}, {}, {}});
        }
      }
    }
    const double dev = exact->max_deviation(plan);
    r.summary["max_deviation"] = dev;
    r.summary["max_fill_atoms"] = exact->max_atoms;
    if (dev > kExactTol) r.flag_violation("exact rates drift from the plan");
  } else {
    KnapsackMcOptions mo;
    mo.replicas = opt.replicas;
    const KnapsackMcEstimates est = run_knapsack_mc(
        inst, plan, sim::TrialConfig{opt.trials, opt.seed, opt.workers}, mo);
    std::size_t outside = 0;
    for (Order order : kBothOrders) {
      const auto& rates = order == Order::kForward ? est.forward : est.backward;
      for (std::size_t i = 0; i < inst.size(); ++i) {
        const auto ci = rates[i].interval();
        if (rates[i].count > 0 &&
            std::abs(rates[i].point() - plan.c(order)[i]) > kCiMultiple * ci.half_width()) {
          ++outside;
        }
        r.table.add({std::string("rate"), as_int(i), std::string(to_string(order)), {},
                     plan.c(order)[i], rates[i].point(), ci.low, ci.high, ci.half_width(),
                     static_cast<std::int64_t>(rates[i].count), {}, {}, {}, {}});
      }
    }
    r.summary["trials"] = opt.trials;
    r.summary["seed"] = opt.seed;
    r.summary["replicas"] = opt.replicas;
    r.summary["capacity_violations"] = est.capacity_violations;
    r.summary["rates_outside_3hw"] = outside;
    if (outside > 0) {
      r.warnings.push_back("some rates sit outside 3 half-widths; the schedule is estimated from " +
                           std::to_string(opt.replicas) + " replicas");
    }
    if (est.capacity_violations > 0) r.flag_violation("knapsack capacity exceeded");
  }

  if (opt.monitor) {
    const InvariantReport& inv = exact->invariants;
    for (const InvariantViolationRecord& v : inv.violations) {
      r.table.add({std::string("invariant"), as_int(v.element), std::string(to_string(v.order)),
                   {}, {}, {}, {}, {}, {}, as_int(v.step), v.kind, v.b, v.lhs, v.rhs});
    }
    r.table.add({std::string("monitor"), {}, {}, {}, {}, {}, {}, {}, {},
                 as_int(inv.checks), std::string("checks"), {},
                 static_cast<double>(inv.checks), static_cast<double>(inv.violations.size())});
    r.summary["monitor_checks"] = inv.checks;
    r.summary["monitor_violations"] = inv.violations.size();
    if (!inv.violations.empty()) r.flag_violation("fill-law invariants violated");
  }
  return r;
}

Report cmd_ration(const RationOptions& opt) {
  const RationingInstance inst =
      expect_kind<RationingInstance>(read_instance(opt.instance), "rationing");
  Report r;
  r.command = "ration";
  std::vector<double> beta;
  if (opt.beta == "auto") {
    const double star = max_uniform_beta(inst);
    beta.assign(inst.size(), star);
    r.summary["beta_star"] = star;
  } else {
    beta = beta_from_json(read_json_file(opt.beta));
  }
  const ExAnteResult ex = exante_check(inst, beta);
  if (ex.status != ExAnteStatus::kFeasible) {
    throw InfeasibleError(std::string(to_string(ex.status)) + ": " + ex.message);
  }
  const ServiceTarget& target = *ex.target;

  SelectionPlan plan;
  std::string plan_source = opt.plan;
  if (inst.has_type_one()) {
    if (plan_source == "auto") plan_source = "closed";
    if (plan_source != "closed") {
      throw InputError("instances with Type-I agents use the knapsack reduction; use --plan closed");
    }
    plan = closed_form_knapsack_plan(knapsack_reduction(inst, target).knapsack);
  } else {
    if (plan_source == "auto") plan_source = "lp";
    const SingleUnitInstance su = induced_single_unit(target);
    if (plan_source == "lp") {
      plan = solve_lp_si(su);
    } else if (plan_source == "closed") {
      plan = closed_form_plan(su);
    } else {
      throw InputError("unknown plan '" + plan_source + "'");
    }
  }

  RationingOptions ro;
  ro.mode = parse_mode(opt.mode);
  ro.trials = sim::TrialConfig{opt.trials, opt.seed, opt.workers};
  const RationingResult res = run_rationing(inst, target, plan, ro);

  r.table.columns = {"agent", "type", "beta", "q", "x", "c_f", "c_b", "tau_f", "tau_b",
                     "alloc_f", "alloc_b", "expected_service", "half_width", "bound", "slack"};
  std::size_t short_agents = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const AgentReport& a = res.agents[i];
    r.table.add({as_int(i), std::string(to_string(inst.service(i))), a.beta, a.q, a.x,
                 a.c_forward, a.c_backward, a.tau_forward, a.tau_backward,
                 a.allocation_forward, a.allocation_backward, a.expected_service,
                 ro.mode == RationingMode::kExact ? Cell{} : Cell{a.half_width}, a.bound,
                 a.slack()});
    const double allowed = ro.mode == RationingMode::kExact ? kLpTol : kCiMultiple * a.half_width;
    if (a.slack() < -allowed) ++short_agents;
  }
  r.summary["n"] = inst.size();
  r.summary["path"] = to_string(res.path);
  r.summary["mode"] = to_string(res.mode);
  r.summary["plan"] = plan_source;
  r.summary["plan_objective"] = plan.objective();
  r.summary["total_supply"] = ex.total_supply;
  r.summary["max_allocation_error"] = res.max_allocation_error;
  r.summary["worst_case_rem_violations"] = res.worst_case_rem_violations;
  r.summary["sampled_rem"] = res.sampled_rem;
  r.summary["max_rem_atoms"] = res.max_rem_atoms;
  r.summary["agents_below_bound"] = short_agents;
  if (ro.mode == RationingMode::kMonteCarlo) {
    r.summary["trials"] = opt.trials;
    r.summary["seed"] = opt.seed;
  }
  for (const std::string& note : res.notes) r.warnings.push_back(note);
  if (!res.sampled_rem && res.max_allocation_error > kLpTol) {
    r.flag_violation("expected allocations drift from c x");
  }
  if (res.worst_case_rem_violations > 0) r.flag_violation("worst-case Rem bound failed");
  if (short_agents > 0) r.flag_violation("service below the guaranteed bound");
  return r;
}

Report cmd_dual_certificate(const DualCertificateOptions& opt) {
  const DualCertificate cert = dual_certificate_uniform(opt.n, opt.rho);
  const DualFeasibilityReport rep = dual_feasibility(cert, opt.rho);
  Report r;
  r.command = "dual-certificate";
  r.table.columns = {"element", "xi", "y_f", "y_b"};
  for (std::size_t i = 0; i < cert.size(); ++i) {
    r.table.add({as_int(i), cert.xi[i], cert.y_forward[i], cert.y_backward[i]});
  }
  const double a0 = alpha_0(opt.rho);
  const double envelope = a0 + (opt.rho + 2.0) / static_cast<double>(opt.n);
  r.summary["N"] = opt.n;
  r.summary["rho"] = opt.rho;
  r.summary["objective"] = cert.objective();
  r.summary["alpha_0"] = a0;
  r.summary["envelope"] = envelope;
  r.summary["max_violation"] = rep.max_violation;
  r.summary["xi_slack_violation"] = rep.xi_slack_violation;
  r.summary["negativity"] = rep.negativity;
  r.summary["feasible"] = rep.feasible();
  if (!rep.feasible()) r.flag_violation("certificate is not dual feasible");
  if (cert.objective() > envelope + kLpTol) r.flag_violation("objective exceeds alpha_0 + (rho+2)/N");
  return r;
}

Report cmd_sweep(const SweepOptions& opt) {
  if (opt.n.empty() || opt.rho.empty()) throw InputError("sweep grid is empty");
  if (opt.kind != "lpopt" && opt.kind != "dual-gap" && opt.kind != "knapsack-min") {
    throw InputError("unknown sweep kind '" + opt.kind + "'");
  }
  Report r;
  r.command = "sweep";
  r.summary["kind"] = opt.kind;
  r.table.columns = {"kind", "n", "rho", "primal", "dual", "gap", "bound"};
  for (std::size_t n : opt.n) {
    for (double rho : opt.rho) {
      if (n == 0 || !(rho >= 0.0)) throw InputError("sweep needs n >= 1 and rho >= 0");
      const double nd = static_cast<double>(n);
      if (opt.kind == "knapsack-min") {
        // n elements of size 1/2, total mean mass rho.
        if (rho > 1.0 || 2.0 * rho > nd) throw InputError("knapsack-min needs rho <= min(1, n/2)");
        std::vector<SizeLaw> laws(n, SizeLaw::bernoulli(0.5, 2.0 * rho / nd));
        const KnapsackInstance inst(std::move(laws));
        const KnapsackPlan plan = closed_form_knapsack_plan(inst);
        const KnapsackExactResult ex = run_knapsack_exact(inst, plan);
        const SelectionPlan rates = ex.element_rates(plan);
        const double primal = rates.objective();
        const double analytic = 4.0 / 9.0 - rho / 9.0;
        r.table.add({opt.kind, as_int(n), rho, primal, analytic, primal - analytic, 1.0 / 3.0});
        if (std::abs(primal - analytic) > kExactTol) {
          r.flag_violation("knapsack pair mean drifts from 4/9 - rho/9 at n=" + std::to_string(n));
        }
        continue;
      }
      if (rho > nd) throw InputError("uniform instance needs rho <= n");
      const SingleUnitInstance inst(std::vector<double>(n, rho / nd));
      const LpSiSolution sol = solve_lp_si_full(inst);
      if (opt.kind == "lpopt") {
        r.table.add({opt.kind, as_int(n), rho, sol.lpopt, sol.dual_objective,
                     sol.dual_objective - sol.lpopt, alpha_0(rho)});
        if (sol.lpopt < alpha_0(rho) - kLpTol) {
          r.flag_violation("LPOPT below alpha_0 at n=" + std::to_string(n));
        }
      } else {
        const DualCertificate cert = dual_certificate_uniform(n, rho);
        const double gap = cert.objective() - sol.lpopt;
        const double bound = (rho + 2.0) / nd;
        r.table.add({opt.kind, as_int(n), rho, sol.lpopt, cert.objective(), gap, bound});
        if (gap < -kLpTol || gap > bound + kLpTol) {
          r.flag_violation("dual gap outside [0, (rho+2)/N] at n=" + std::to_string(n));
        }
      }
    }
  }
  return r;
}

}  // namespace fbcrs::cli
