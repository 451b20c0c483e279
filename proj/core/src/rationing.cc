#include "fbcrs/rationing.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbcrs/error.h"

namespace fbcrs {

namespace {

constexpr double kAtomMerge = 1e-12;
constexpr double kExpectationTol = 1e-10;
constexpr std::size_t kNoAtom = std::numeric_limits<std::size_t>::max();

// Slope of the service integral on demand atom d.
double service_slope(ServiceType type, double d, double mu) {
  return service_value(type, std::min(d, 1.0), d, mu);
}

double overlap(const DemandLaw& law, std::size_t k, double lo_q, double hi_q) {
  const auto [lo, hi] = law.quantile_range(k);
  return std::max(0.0, std::min(hi, hi_q) - std::max(lo, lo_q));
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << what << " = " << v << " is outside [0, 1]";
    throw InputError(msg.str());
  }
}

double draw_value(const std::map<double, double>& atoms, double total, RngStream& rng) {
  double u = rng.uniform() * total;
  for (const auto& [r, p] : atoms) {
    if (u < p) return r;
    u -= p;
  }
  return atoms.rbegin()->first;
}

}  // namespace

double service_value(ServiceType type, double y, double d, double mu) {
  if (!(y >= 0.0 && d >= 0.0)) throw InputError("service_value needs y, d >= 0");
  switch (type) {
    case ServiceType::kTypeI:
      return y >= d ? 1.0 : 0.0;
    case ServiceType::kTypeII:
      if (!(mu > 0.0)) throw InputError("Type-II service needs mu > 0");
      return std::min(y, d) / mu;
    case ServiceType::kTypeIII:
      return d == 0.0 ? 1.0 : std::min(y, d) / d;
  }
  return 0.0;
}

double supply_integral(const DemandLaw& law, double q) {
  std::vector<double> terms;
  for (std::size_t k = 0; k < law.atoms().size(); ++k) {
    terms.push_back(std::min(law.atoms()[k].value, 1.0) * overlap(law, k, 0.0, q));
  }
  return compensated_sum(terms);
}

double service_integral(const DemandLaw& law, ServiceType type, double q) {
  std::vector<double> terms;
  for (std::size_t k = 0; k < law.atoms().size(); ++k) {
    const double d = law.atoms()[k].value;
    terms.push_back(service_slope(type, d, law.mean()) * overlap(law, k, 0.0, q));
  }
  return compensated_sum(terms);
}

double solve_q_for_beta(const DemandLaw& law, ServiceType type, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0 + kExpectationTol)) {
    throw InputError("beta must lie in [0, 1]");
  }
  if (beta == 0.0) return 0.0;
  double reached = 0.0;
  double last_rise_end = 0.0;
  for (std::size_t k = 0; k < law.atoms().size(); ++k) {
    const auto [lo, hi] = law.quantile_range(k);
    const double slope = service_slope(type, law.atoms()[k].value, law.mean());
    if (slope <= 0.0 || hi <= lo) continue;
    const double gain = slope * (hi - lo);
    if (reached + gain >= beta) {
      return std::clamp(lo + (beta - reached) / slope, lo, hi);
    }
    reached += gain;
    last_rise_end = hi;
  }
  if (beta <= reached + kExpectationTol) return last_rise_end;
  std::ostringstream msg;
  msg << "beta = " << beta << " exceeds the largest achievable Type-" << to_string(type)
      << " service " << reached;
  throw InfeasibleError(msg.str());
}

const char* to_string(ExAnteStatus status) {
  switch (status) {
    case ExAnteStatus::kFeasible:
      return "feasible";
    case ExAnteStatus::kAgentInfeasible:
      return "agent-infeasible";
    case ExAnteStatus::kSupplyExceeded:
      return "supply-exceeded";
  }
  return "?";
}

ExAnteResult exante_check(const RationingInstance& inst, const std::vector<double>& beta) {
  if (beta.size() != inst.size()) throw InputError("one beta per agent is required");
  ExAnteResult result;
  ServiceTarget target;
  target.beta = beta;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    check_unit(beta[i], "beta");
    double q = 0.0;
    try {
      q = solve_q_for_beta(inst.demand(i), inst.service(i), beta[i]);
    } catch (const InfeasibleError& e) {
      result.status = ExAnteStatus::kAgentInfeasible;
      result.failing_agent = i;
      result.message = "agent " + std::to_string(i) + ": " + e.what();
      return result;
    }
    target.q.push_back(q);
    target.x.push_back(supply_integral(inst.demand(i), q));
  }
  result.total_supply = compensated_sum(target.x);
  if (result.total_supply > 1.0 + kSupplySlack) {
    result.status = ExAnteStatus::kSupplyExceeded;
    std::ostringstream msg;
    msg << "total supply " << result.total_supply << " exceeds 1";
    result.message = msg.str();
    return result;
  }
  result.target = std::move(target);
  return result;
}

double max_uniform_beta(const RationingInstance& inst) {
  double hi = 1.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    hi = std::min(hi, service_integral(inst.demand(i), inst.service(i), 1.0));
  }
  hi = std::max(0.0, hi);
  auto feasible = [&](double b) {
    return exante_check(inst, std::vector<double>(inst.size(), b)).status ==
           ExAnteStatus::kFeasible;
  };
  if (feasible(hi)) return hi;
  double lo = 0.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

SingleUnitInstance induced_single_unit(const ServiceTarget& target) {
  std::vector<double> x = target.x;
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
  return SingleUnitInstance(std::move(x));
}

std::vector<DemandSegment> active_segments(const DemandLaw& law, double q) {
  std::vector<DemandSegment> out;
  for (std::size_t k = 0; k < law.atoms().size(); ++k) {
    const double w = overlap(law, k, 0.0, q);
    if (w > 0.0) out.push_back({law.atoms()[k].value, w});
  }
  return out;
}

std::vector<DemandSegment> inactive_segments(const DemandLaw& law, double q) {
  std::vector<DemandSegment> out;
  for (std::size_t k = 0; k < law.atoms().size(); ++k) {
    const double w = overlap(law, k, q, 1.0);
    if (w > 0.0) out.push_back({law.atoms()[k].value, w});
  }
  return out;
}

RemDistribution RemDistribution::from_samples(const std::vector<double>& values) {
  if (values.empty()) throw InputError("empty Rem sample");
  RemDistribution out = empty();
  const double w = 1.0 / static_cast<double>(values.size());
  for (double v : values) out.add(v, w);
  return out;
}

void RemDistribution::add(double r, double mass) {
  if (mass == 0.0) return;
  r = std::clamp(r, 0.0, 1.0);
  auto it = atoms_.lower_bound(r - kAtomMerge);
  if (it != atoms_.end() && it->first <= r + kAtomMerge) {
    it->second += mass;
  } else {
    atoms_.emplace(r, mass);
  }
}

double RemDistribution::total_mass() const {
  std::vector<double> m;
  for (const auto& [r, p] : atoms_) m.push_back(p);
  return compensated_sum(m);
}

double RemDistribution::mean() const {
  std::vector<double> m;
  for (const auto& [r, p] : atoms_) m.push_back(r * p);
  return compensated_sum(m);
}

double RemDistribution::expected_min(double c) const {
  std::vector<double> m;
  for (const auto& [r, p] : atoms_) m.push_back(std::min(r, c) * p);
  return compensated_sum(m);
}

double expected_allocation(const std::vector<DemandSegment>& active,
                           const RemDistribution& rem, double tau) {
  std::vector<double> terms;
  for (const DemandSegment& seg : active) {
    terms.push_back(seg.weight * rem.expected_min(std::min(seg.demand, tau)));
  }
  return compensated_sum(terms);
}

double calibrate_tau(const DemandLaw& law, double q, const RemDistribution& rem,
                     double target) {
  if (target <= 0.0) return 0.0;
  const std::vector<DemandSegment> active = active_segments(law, q);
  const double top = expected_allocation(active, rem, 1.0);
  if (target > top + kExpectationTol) {
    std::ostringstream msg;
    msg << "calibration target " << target << " exceeds the reachable expectation " << top;
    throw InvariantViolation(msg.str());
  }
  if (target >= top) return 1.0;

  std::vector<double> knots{0.0, 1.0};
  for (const DemandSegment& seg : active) {
    if (seg.demand > 0.0 && seg.demand < 1.0) knots.push_back(seg.demand);
  }
  for (const auto& [r, p] : rem.atoms()) {
    if (r > 0.0 && r < 1.0) knots.push_back(r);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // First knot whose expectation reaches the target; the map is linear
  // between it and its predecessor.
  std::size_t lo = 0;
  std::size_t hi = knots.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (expected_allocation(active, rem, knots[mid]) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double g_lo = expected_allocation(active, rem, knots[lo]);
  const double g_hi = expected_allocation(active, rem, knots[hi]);
  if (g_hi <= g_lo) return knots[hi];
  const double frac = std::clamp((target - g_lo) / (g_hi - g_lo), 0.0, 1.0);
  return knots[lo] + frac * (knots[hi] - knots[lo]);
}

const char* to_string(RationingMode mode) {
  return mode == RationingMode::kExact ? "exact" : "mc";
}

const char* to_string(ReductionPath path) {
  return path == ReductionPath::kSingleUnit ? "single-unit" : "knapsack";
}

KnapsackReduction knapsack_reduction(const RationingInstance& inst,
                                     const ServiceTarget& target) {
  if (target.size() != inst.size()) throw InputError("target and instance sizes differ");
  std::vector<SizeLaw> laws;
  std::vector<std::vector<std::size_t>> atom_of;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const DemandLaw& law = inst.demand(i);
    std::vector<Atom> sizes;
    std::vector<double> weights;
    std::vector<std::size_t> map(law.atoms().size(), kNoAtom);
    for (std::size_t k = 0; k < law.atoms().size(); ++k) {
      const double w = overlap(law, k, 0.0, target.q[i]);
      if (w <= 0.0) continue;
      const double s = std::min(law.atoms()[k].value, 1.0);
      if (!sizes.empty() && sizes.back().value == s) {
        sizes.back().probability += w;
      } else {
        sizes.push_back({s, w});
      }
      weights.push_back(w);
      map[k] = sizes.size() - 1;
    }
    const double inactive = std::max(0.0, 1.0 - compensated_sum(weights));
    laws.emplace_back(std::move(sizes), inactive);
    atom_of.push_back(std::move(map));
  }
  return {KnapsackInstance(std::move(laws)), std::move(atom_of)};
}

namespace {

struct RationingAcc {
  std::vector<sim::MeanEstimate> service;
  std::uint64_t overdraws = 0;
  std::vector<AllocationTrace> traces;

  void merge(const RationingAcc& other) {
    if (service.size() < other.service.size()) service.resize(other.service.size());
    for (std::size_t i = 0; i < other.service.size(); ++i) service[i].merge(other.service[i]);
    overdraws += other.overdraws;
    traces.insert(traces.end(), other.traces.begin(), other.traces.end());
  }
};

void check_plan_size(const SelectionPlan& plan, std::size_t n) {
  if (plan.size() != n || plan.c_backward.size() != n) {
    throw InputError("plan and instance sizes differ");
  }
}

double inactive_service(const RationingInstance& inst, std::size_t i, double q) {
  std::vector<double> terms;
  for (const DemandSegment& seg : inactive_segments(inst.demand(i), q)) {
    terms.push_back(seg.weight *
                    service_value(inst.service(i), 0.0, seg.demand, inst.demand(i).mean()));
  }
  return compensated_sum(terms);
}

void finish_mc(RationingResult& result, RationingAcc acc, double confidence) {
  for (std::size_t i = 0; i < result.agents.size(); ++i) {
    result.agents[i].expected_service = acc.service[i].point();
    result.agents[i].half_width = acc.service[i].half_width(confidence);
  }
  result.overdraws = acc.overdraws;
  result.traces = std::move(acc.traces);
  if (result.overdraws > 0) {
    throw InvariantViolation("supply overdrawn on " + std::to_string(result.overdraws) +
                             " sample paths");
  }
}

RationingResult run_single_unit_path(const RationingInstance& inst,
                                     const ServiceTarget& target, const SelectionPlan& plan,
                                     const RationingOptions& options) {
  const std::size_t n = inst.size();
  RationingResult result;
  result.path = ReductionPath::kSingleUnit;
  result.mode = options.mode;
  result.agents.resize(n);
  std::vector<std::vector<DemandSegment>> active(n);
  for (std::size_t i = 0; i < n; ++i) {
    active[i] = active_segments(inst.demand(i), target.q[i]);
    AgentReport& a = result.agents[i];
    a.beta = target.beta[i];
    a.q = target.q[i];
    a.x = target.x[i];
    a.c_forward = plan.c_forward[i];
    a.c_backward = plan.c_backward[i];
    a.bound = plan.pair_mean(i) * a.beta;
  }

  std::vector<double> exact_service(n, 0.0);
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& c = plan.c(order);
    RemDistribution rem;
    std::vector<double> pool;
    RngStream pool_rng(options.trials.seed ^ 0xA5A5A5A5A5A5A5A5ULL,
                       order == Order::kForward ? 0 : 1);
    double prefix = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      AgentReport& a = result.agents[i];
      const DemandLaw& law = inst.demand(i);
      const double mu = law.mean();
      const double want = c[i] * a.x;

      if (expected_allocation(active[i], rem, 1.0) < (1.0 - prefix) * a.x - kExpectationTol) {
        ++result.worst_case_rem_violations;
      }
      const double tau = calibrate_tau(law, a.q, rem, want);
      (order == Order::kForward ? a.tau_forward : a.tau_backward) = tau;

      // Independent of calibrate_tau's knot search: direct sums over atoms.
      std::vector<double> alloc_terms;
      std::vector<double> service_terms;
      for (const auto& [r, p] : rem.atoms()) {
        for (const DemandSegment& seg : active[i]) {
          const double y = std::min({seg.demand, r, tau});
          alloc_terms.push_back(p * seg.weight * y);
          service_terms.push_back(p * seg.weight *
                                  service_value(inst.service(i), y, seg.demand, mu));
        }
      }
      const double alloc = compensated_sum(alloc_terms);
      (order == Order::kForward ? a.allocation_forward : a.allocation_backward) = alloc;
      result.max_allocation_error = std::max(result.max_allocation_error, std::abs(alloc - want));
      exact_service[i] += 0.5 * (compensated_sum(service_terms) + inactive_service(inst, i, a.q));

      if (pool.empty()) {
        RemDistribution next = RemDistribution::empty();
        const double stay = std::max(0.0, 1.0 - a.q);
        for (const auto& [r, p] : rem.atoms()) {
          next.add(r, p * stay);
          for (const DemandSegment& seg : active[i]) {
            next.add(r - std::min({seg.demand, r, tau}), p * seg.weight);
          }
        }
        if (next.atom_count() > options.atom_cap) {
          result.sampled_rem = true;
          const double total = next.total_mass();
          pool.resize(std::max<std::size_t>(1, options.sample_size));
          for (double& v : pool) v = draw_value(next.atoms(), total, pool_rng);
          rem = RemDistribution::from_samples(pool);
        } else {
          rem = std::move(next);
        }
      } else {
        for (double& r : pool) {
          const QuantileDraw draw = draw_quantile_demand(law, pool_rng);
          if (draw.quantile <= a.q) r -= std::min({draw.demand, r, tau});
        }
        rem = RemDistribution::from_samples(pool);
      }
      result.max_rem_atoms = std::max(result.max_rem_atoms, rem.atom_count());
      prefix += want;
    }
  }
  if (result.sampled_rem) {
    result.notes.push_back("Rem law exceeded the atom cap; later steps use a sampled pool");
  }

  if (options.mode == RationingMode::kExact) {
    for (std::size_t i = 0; i < n; ++i) result.agents[i].expected_service = exact_service[i];
    return result;
  }

  RationingAcc init;
  init.service.resize(n);
  RationingAcc acc = sim::run_trials(
      options.trials, init, [&](std::uint64_t t, RngStream& rng, RationingAcc& out) {
        AllocationTrace trace;
        trace.order = rng.bernoulli(0.5) ? Order::kForward : Order::kBackward;
        trace.quantile.assign(n, 0.0);
        trace.demand.assign(n, 0.0);
        trace.allocation.assign(n, 0.0);
        trace.service.assign(n, 0.0);
        const Permutation perm(trace.order, n);
        double rem = 1.0;
        double used = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = perm.element_at(k);
          const AgentReport& a = result.agents[i];
          const QuantileDraw draw = draw_quantile_demand(inst.demand(i), rng);
          const double tau = trace.order == Order::kForward ? a.tau_forward : a.tau_backward;
          const double y = draw.quantile <= a.q ? std::min({draw.demand, rem, tau}) : 0.0;
          rem -= y;
          used += y;
          const double s = service_value(inst.service(i), y, draw.demand, inst.demand(i).mean());
          out.service[i].record(s);
          trace.quantile[i] = draw.quantile;
          trace.demand[i] = draw.demand;
          trace.allocation[i] = y;
          trace.service[i] = s;
        }
        if (used > 1.0 + kAtomMerge || rem < -kAtomMerge) ++out.overdraws;
        if (t < options.keep_traces) out.traces.push_back(std::move(trace));
      });
  finish_mc(result, std::move(acc), sim::kDefaultConfidence);
  return result;
}

RationingResult run_knapsack_path(const RationingInstance& inst, const ServiceTarget& target,
                                  const SelectionPlan& plan, const RationingOptions& options) {
  const std::size_t n = inst.size();
  const KnapsackReduction red = knapsack_reduction(inst, target);
  const KnapsackExactResult exact = run_knapsack_exact(red.knapsack, plan);

  RationingResult result;
  result.path = ReductionPath::kKnapsack;
  result.mode = options.mode;
  result.agents.resize(n);
  if (!exact.invariants.violations.empty()) {
    result.notes.push_back(std::to_string(exact.invariants.violations.size()) +
                           " fill-law monitor violations on the knapsack reduction");
  }
  for (std::size_t i = 0; i < n; ++i) {
    AgentReport& a = result.agents[i];
    const DemandLaw& law = inst.demand(i);
    a.beta = target.beta[i];
    a.q = target.q[i];
    a.x = target.x[i];
    a.c_forward = plan.c_forward[i];
    a.c_backward = plan.c_backward[i];
    a.tau_forward = std::numeric_limits<double>::quiet_NaN();
    a.tau_backward = std::numeric_limits<double>::quiet_NaN();
    a.bound = plan.pair_mean(i) * a.beta;
    double service = 0.0;
    for (Order order : kBothOrders) {
      std::vector<double> alloc_terms;
      std::vector<double> service_terms;
      for (std::size_t k = 0; k < law.atoms().size(); ++k) {
        const std::size_t atom = red.segment_atom[i][k];
        if (atom == kNoAtom) continue;
        const double d = law.atoms()[k].value;
        const double w = overlap(law, k, 0.0, a.q);
        const double rate = exact.rates(order)[i][atom];
        const double y = std::min(d, 1.0);
        alloc_terms.push_back(w * rate * y);
        // A rejected zero demand can still be served (Type I: 0 >= 0).
        service_terms.push_back(w * (rate * service_value(inst.service(i), y, d, law.mean()) +
                                     (1.0 - rate) *
                                         service_value(inst.service(i), 0.0, d, law.mean())));
      }
      const double alloc = compensated_sum(alloc_terms);
      (order == Order::kForward ? a.allocation_forward : a.allocation_backward) = alloc;
      result.max_allocation_error =
          std::max(result.max_allocation_error, std::abs(alloc - plan.c(order)[i] * a.x));
      service += 0.5 * compensated_sum(service_terms);
    }
    a.expected_service = service + inactive_service(inst, i, a.q);
  }

  if (options.mode == RationingMode::kExact) return result;

  RationingAcc init;
  init.service.resize(n);
  RationingAcc acc = sim::run_trials(
      options.trials, init, [&](std::uint64_t t, RngStream& rng, RationingAcc& out) {
        AllocationTrace trace;
        trace.order = rng.bernoulli(0.5) ? Order::kForward : Order::kBackward;
        trace.quantile.assign(n, 0.0);
        trace.demand.assign(n, 0.0);
        trace.allocation.assign(n, 0.0);
        trace.service.assign(n, 0.0);
        const Permutation perm(trace.order, n);
        const auto& rules = exact.schedule.rules(trace.order);
        double fill = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = perm.element_at(k);
          const DemandLaw& law = inst.demand(i);
          const double u = rng.uniform();
          const double bit = rng.uniform();
          const double d = law.inverse_cdf(u);
          double y = 0.0;
          if (u <= target.q[i]) {
            const std::size_t atom = red.segment_atom[i][law.atom_index(u)];
            if (atom != kNoAtom && bit < acceptance_probability(rules[i][atom], fill)) {
              y = std::min(d, 1.0);
              fill += y;
            }
          }
          const double s = service_value(inst.service(i), y, d, law.mean());
          out.service[i].record(s);
          trace.quantile[i] = u;
          trace.demand[i] = d;
          trace.allocation[i] = y;
          trace.service[i] = s;
        }
        if (fill > 1.0 + kFillTolerance) ++out.overdraws;
        if (t < options.keep_traces) out.traces.push_back(std::move(trace));
      });
  finish_mc(result, std::move(acc), sim::kDefaultConfidence);
  return result;
}

}  // namespace

RationingResult run_rationing(const RationingInstance& inst, const ServiceTarget& target,
                              const SelectionPlan& plan, const RationingOptions& options) {
  if (target.size() != inst.size() || target.q.size() != inst.size() ||
      target.x.size() != inst.size()) {
    throw InputError("target and instance sizes differ");
  }
  check_plan_size(plan, inst.size());
  if (options.mode == RationingMode::kMonteCarlo && options.trials.trials == 0) {
    throw InputError("Monte Carlo mode needs at least one trial");
  }
  RationingResult result = inst.has_type_one()
                               ? run_knapsack_path(inst, target, plan, options)
                               : run_single_unit_path(inst, target, plan, options);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (inst.service(i) == ServiceType::kTypeIII && inst.demand(i).has_zero_atom()) {
      result.notes.push_back("agent " + std::to_string(i) +
                             " has a zero-demand atom (service 0/0 counted as 1)");
    }
  }
  return result;
}

}  // namespace fbcrs
