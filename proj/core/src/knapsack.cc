#include "fbcrs/knapsack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbcrs/error.h"

namespace fbcrs {

namespace {

constexpr double kPlanSlack = 1e-9;

bool is_zero_fill(double t) { return t <= kFillTolerance; }

bool fits(double t, double s) { return t + s <= 1.0 + kFillTolerance; }

// Bernoulli parameters for one size atom. With `exact` set, an unreachable
// target is an error; otherwise parameters are clamped as the online rule
// prescribes.
AcceptanceRule make_rule(double size, double c, double p_zero, double p_pos,
                         bool exact) {
  AcceptanceRule rule;
  rule.size = size;
  rule.prob_zero = p_zero;
  rule.prob_positive = p_pos;
  if (c <= p_pos) {
    rule.if_positive = p_pos > 0.0 ? std::min(1.0, c / p_pos) : 0.0;
    rule.if_zero = 0.0;
    return rule;
  }
  rule.if_positive = 1.0;
  const double need = c - p_pos;
  if (exact && need > p_zero + kPlanSlack) {
    std::ostringstream msg;
    msg << "target rate " << c << " exceeds Pr[T=0] + Pr[0<T<=1-s] = " << p_zero + p_pos
        << " for size " << size;
    throw InfeasibleError(msg.str());
  }
  rule.if_zero = p_zero > 0.0 ? std::min(1.0, need / p_zero) : 0.0;
  return rule;
}

double prob_fit_positive(const FillDistribution& dist, double s) {
  return dist.prob_positive_at_most(1.0 - s);
}

}  // namespace

double acceptance_probability(const AcceptanceRule& rule, double fill) {
  if (is_zero_fill(fill)) return rule.if_zero;
  return fits(fill, rule.size) ? rule.if_positive : 0.0;
}

double phi_knapsack(double z) {
  if (!(z >= -kFillTolerance && z <= 1.0 + kFillTolerance)) {
    throw InputError("phi_knapsack is defined on [0, 1]");
  }
  return 4.0 / 9.0 - 2.0 * z / 9.0;
}

KnapsackPlan closed_form_knapsack_plan(const KnapsackInstance& inst) {
  const double total = inst.total_mu();
  if (total > 1.0 + kPlanSlack) {
    std::ostringstream msg;
    msg << "closed-form knapsack plan requires sum mu <= 1 (got " << total << ")";
    throw InfeasibleError(msg.str());
  }
  const std::size_t n = inst.size();
  KnapsackPlan plan;
  plan.source = PlanSource::kClosedForm;
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    auto& c = order == Order::kForward ? plan.c_forward : plan.c_backward;
    c.resize(n);
    CompensatedSum seen;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      const double start = seen.value();
      // Mean of the linear curve over [start, start + mu] is its midpoint value.
      c[i] = 4.0 / 9.0 - (2.0 * start + inst.mu(i)) / 9.0;
      seen.add(inst.mu(i));
    }
  }
  return plan;
}

double KnapsackFeasibilityReport::max_violation() const {
  return std::max({max_violation_linear, max_violation_exponential, max_range_violation});
}

KnapsackFeasibilityReport check_knapsack_feasible(const SelectionPlan& plan,
                                                  const KnapsackInstance& inst) {
  const std::size_t n = inst.size();
  if (plan.size() != n || plan.c_backward.size() != n) {
    throw InputError("plan and instance sizes differ");
  }
  KnapsackFeasibilityReport report;
  report.max_violation_linear = -std::numeric_limits<double>::infinity();
  report.max_violation_exponential = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (plan.c_forward[i + 1] > plan.c_forward[i] + kPlanSlack) {
      report.monotonicity_violations.push_back("forward:" + std::to_string(i));
    }
    if (plan.c_backward[i] > plan.c_backward[i + 1] + kPlanSlack) {
      report.monotonicity_violations.push_back("backward:" + std::to_string(i));
    }
  }
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& c = plan.c(order);
    const double c_first = c[perm.first()];
    if (c_first <= 0.0) report.zero_first_rate.push_back(order);
    double prefix = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      report.max_range_violation =
          std::max({report.max_range_violation, -c[i], c[i] - 1.0});
      report.max_violation_linear =
          std::max(report.max_violation_linear, c[i] - (1.0 - c_first - prefix));
      double decay = 0.0;
      if (c_first > 0.0) {
        decay = c_first * std::exp(-2.0 * prefix / c_first);
      } else if (prefix <= 0.0) {
        decay = 0.0;  // 0 * exp(-0/0): the first-element term vanishes either way
      }
      report.max_violation_exponential =
          std::max(report.max_violation_exponential, c[i] - (1.0 - 2.0 * prefix - decay));
      prefix += c[i] * inst.mu(i);
    }
  }
  return report;
}

void FillDistribution::add(double t, double mass) {
  if (mass == 0.0) return;
  auto it = atoms_.lower_bound(t - kFillTolerance);
  if (it != atoms_.end() && it->first <= t + kFillTolerance) {
    it->second += mass;
  } else {
    atoms_.emplace(t, mass);
  }
}

double FillDistribution::total_mass() const {
  std::vector<double> m;
  for (const auto& [t, p] : atoms_) m.push_back(p);
  return compensated_sum(m);
}

double FillDistribution::mean() const {
  std::vector<double> m;
  for (const auto& [t, p] : atoms_) m.push_back(t * p);
  return compensated_sum(m);
}

double FillDistribution::prob_zero() const {
  double out = 0.0;
  for (const auto& [t, p] : atoms_) {
    if (!is_zero_fill(t)) break;
    out += p;
  }
  return out;
}

double FillDistribution::prob_positive_at_most(double hi) const {
  return prob_between(0.0, hi);
}

double FillDistribution::prob_between(double lo, double hi) const {
  double out = 0.0;
  for (auto it = atoms_.upper_bound(lo + kFillTolerance); it != atoms_.end(); ++it) {
    if (it->first > hi + kFillTolerance) break;
    out += it->second;
  }
  return out;
}

PropagationStep propagate_fill(const FillDistribution& dist, const SizeLaw& law,
                               double c) {
  if (!(c >= 0.0 && c <= 1.0 + kPlanSlack)) {
    throw InputError("propagate_fill needs c in [0, 1]");
  }
  PropagationStep step;
  step.next = FillDistribution::empty();
  const double p_zero = dist.prob_zero();
  for (const auto& [t, p] : dist.atoms()) step.next.add(t, p * law.inactive_mass());
  for (const Atom& atom : law.atoms()) {
    const double s = atom.value;
    const double p_pos = prob_fit_positive(dist, s);
    const AcceptanceRule rule = make_rule(s, c, p_zero, p_pos, /*exact=*/true);
    double accepted = 0.0;
    for (const auto& [t, p] : dist.atoms()) {
      const double mass = p * atom.probability;
      const double take = acceptance_probability(rule, t);
      accepted += p * take;
      step.next.add(std::min(1.0, t + s), mass * take);
      step.next.add(t, mass * (1.0 - take));
    }
    step.rules.push_back(rule);
    step.rates.push_back(accepted);
  }
  return step;
}

std::vector<double> default_b_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.05 * k);
  return grid;
}

void monitor_invariants(const FillDistribution& dist, double c_first, double c,
                        const std::vector<double>& b_grid, std::size_t step,
                        std::size_t element, Order order, InvariantReport& report,
                        double tol) {
  const double p_zero = dist.prob_zero();
  ++report.checks;
  if (p_zero < c - tol) {
    report.violations.push_back({step, element, order, "zero-mass", 0.0, p_zero, c});
  }
  if (c_first <= 0.0) {
    report.first_rate_zero = true;
    return;
  }
  for (double b : b_grid) {
    ++report.checks;
    const double lhs = dist.prob_between(0.0, b) / c_first;
    const double rhs = std::exp(-dist.prob_between(b, 1.0 - b) / c_first);
    if (lhs > rhs + tol) {
      report.violations.push_back({step, element, order, "anti-concentration", b, lhs, rhs});
    }
  }
}

SelectionPlan KnapsackExactResult::element_rates(const SelectionPlan& plan) const {
  SelectionPlan out;
  for (Order order : kBothOrders) {
    const auto& r = rates(order);
    auto& dst = order == Order::kForward ? out.c_forward : out.c_backward;
    dst.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].empty()) {
        dst[i] = plan.c(order)[i];
        continue;
      }
      // Rates are size-independent; report the smallest to stay conservative.
      dst[i] = *std::min_element(r[i].begin(), r[i].end());
    }
  }
  return out;
}

double KnapsackExactResult::max_deviation(const SelectionPlan& plan) const {
  double worst = 0.0;
  for (Order order : kBothOrders) {
    const auto& r = rates(order);
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (double rate : r[i]) worst = std::max(worst, std::abs(rate - plan.c(order)[i]));
    }
  }
  return worst;
}

KnapsackExactResult run_knapsack_exact(const KnapsackInstance& inst,
                                       const SelectionPlan& plan,
                                       const KnapsackExactOptions& options) {
  const std::size_t n = inst.size();
  if (plan.size() != n || plan.c_backward.size() != n) {
    throw InputError("plan and instance sizes differ");
  }
  KnapsackExactResult result;
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& c = plan.c(order);
    const double c_first = c[perm.first()];
    auto& rates = order == Order::kForward ? result.rates_forward : result.rates_backward;
    auto& rules = order == Order::kForward ? result.schedule.forward : result.schedule.backward;
    rates.assign(n, {});
    rules.assign(n, {});
    FillDistribution dist;
    std::vector<double> expected_terms;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      if (options.monitor) {
        monitor_invariants(dist, c_first, c[i], options.b_grid, k, i, order,
                           result.invariants);
        const double expected = compensated_sum(expected_terms);
        if (std::abs(dist.mean() - expected) > 1e-10) {
          result.invariants.violations.push_back(
              {k, i, order, "mean", 0.0, dist.mean(), expected});
        }
        if (std::abs(dist.total_mass() - 1.0) > 1e-12) {
          result.invariants.violations.push_back(
              {k, i, order, "mass", 0.0, dist.total_mass(), 1.0});
        }
      }
      PropagationStep step = propagate_fill(dist, inst.law(i), std::min(1.0, c[i]));
      rates[i] = std::move(step.rates);
      rules[i] = std::move(step.rules);
      dist = std::move(step.next);
      result.max_atoms = std::max(result.max_atoms, dist.atom_count());
      expected_terms.push_back(c[i] * inst.mu(i));
    }
    (order == Order::kForward ? result.final_forward : result.final_backward) =
        std::move(dist);
  }
  return result;
}

KnapsackRun run_knapsack_once(const KnapsackInstance& inst,
                              const KnapsackSchedule& schedule, RngStream& rng) {
  const std::size_t n = inst.size();
  KnapsackRun run;
  run.order = rng.bernoulli(0.5) ? Order::kForward : Order::kBackward;
  run.active.assign(n, false);
  run.size.assign(n, 0.0);
  run.accepted.assign(n, false);
  const Permutation perm(run.order, n);
  const auto& rules = schedule.rules(run.order);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = perm.element_at(k);
    const SizeLaw& law = inst.law(i);
    // Inverse-CDF draw over (atoms..., inactive).
    double u = rng.uniform();
    std::size_t atom = law.atoms().size();
    for (std::size_t a = 0; a < law.atoms().size(); ++a) {
      if (u < law.atoms()[a].probability) {
        atom = a;
        break;
      }
      u -= law.atoms()[a].probability;
    }
    const double bit_u = rng.uniform();
    if (atom == law.atoms().size()) continue;
    const double s = law.atoms()[atom].value;
    run.active[i] = true;
    run.size[i] = s;
    if (bit_u < acceptance_probability(rules[i][atom], run.fill)) {
      run.accepted[i] = true;
      run.fill += s;
    }
  }
  return run;
}

KnapsackSchedule sampled_schedule(const KnapsackInstance& inst,
                                  const SelectionPlan& plan, std::size_t replicas,
                                  std::uint64_t seed) {
  if (replicas == 0) throw InputError("sampled_schedule needs at least one replica");
  const std::size_t n = inst.size();
  KnapsackSchedule schedule;
  std::uint64_t key = seed ^ 0x5DEECE66DULL;
  const std::uint64_t pool_seed = splitmix64(key);
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    auto& rules = order == Order::kForward ? schedule.forward : schedule.backward;
    rules.assign(n, {});
    std::vector<double> fills(replicas, 0.0);
    RngStream rng(pool_seed, order == Order::kForward ? 0 : 1);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      const SizeLaw& law = inst.law(i);
      std::size_t zeros = 0;
      for (double t : fills) zeros += is_zero_fill(t) ? 1 : 0;
      const double r = static_cast<double>(replicas);
      for (const Atom& atom : law.atoms()) {
        std::size_t pos = 0;
        for (double t : fills) pos += (!is_zero_fill(t) && fits(t, atom.value)) ? 1 : 0;
        rules[i].push_back(make_rule(atom.value, plan.c(order)[i], zeros / r, pos / r,
                                     /*exact=*/false));
      }
      // Advance every replica through element i with the estimated rules.
      for (double& t : fills) {
        double u = rng.uniform();
        std::size_t atom = law.atoms().size();
        for (std::size_t a = 0; a < law.atoms().size(); ++a) {
          if (u < law.atoms()[a].probability) {
            atom = a;
            break;
          }
          u -= law.atoms()[a].probability;
        }
        const double bit_u = rng.uniform();
        if (atom == law.atoms().size()) continue;
        const AcceptanceRule& rule = rules[i][atom];
        if (bit_u < acceptance_probability(rule, t)) t += rule.size;
      }
    }
  }
  return schedule;
}

void KnapsackMcEstimates::merge(const KnapsackMcEstimates& other) {
  auto merge_all = [](std::vector<sim::RateEstimate>& a,
                      const std::vector<sim::RateEstimate>& b) {
    if (a.size() < b.size()) a.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) a[i].merge(b[i]);
  };
  merge_all(forward, other.forward);
  merge_all(backward, other.backward);
  merge_all(pooled, other.pooled);
  capacity_violations += other.capacity_violations;
}

KnapsackMcEstimates run_knapsack_mc(const KnapsackInstance& inst,
                                    const SelectionPlan& plan,
                                    const sim::TrialConfig& config,
                                    const KnapsackMcOptions& options) {
  const KnapsackSchedule schedule =
      sampled_schedule(inst, plan, options.replicas, config.seed);
  const std::size_t n = inst.size();
  KnapsackMcEstimates init;
  init.forward.resize(n);
  init.backward.resize(n);
  init.pooled.resize(n);
  return sim::run_trials(
      config, init, [&](std::uint64_t, RngStream& rng, KnapsackMcEstimates& acc) {
        const KnapsackRun run = run_knapsack_once(inst, schedule, rng);
        if (run.fill > 1.0 + kFillTolerance) ++acc.capacity_violations;
        auto& by_order = run.order == Order::kForward ? acc.forward : acc.backward;
        for (std::size_t i = 0; i < n; ++i) {
          if (!run.active[i]) continue;
          by_order[i].record(run.accepted[i]);
          acc.pooled[i].record(run.accepted[i]);
        }
      });
}

}  // namespace fbcrs
