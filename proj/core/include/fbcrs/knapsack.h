#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fbcrs/instances.h"
#include "fbcrs/lp_si.h"
#include "fbcrs/rng.h"
#include "fbcrs/sim.h"

namespace fbcrs {

// Fill values closer than this are the same atom; also the slack used in
// every "fits in the knapsack" comparison.
inline constexpr double kFillTolerance = 1e-12;

// 4/9 - 2z/9 on [0, 1].
double phi_knapsack(double z);

enum class PlanSource { kClosedForm, kUser };

struct KnapsackPlan : SelectionPlan {
  PlanSource source = PlanSource::kUser;
};

// c_sigma(i) = average of phi_knapsack over [mu_sigma(i), mu_sigma(i) + mu_i].
// Throws InfeasibleError when sum mu > 1 (+1e-9). When sum mu < 1 the
// masses occupy [0, sum mu] without rescaling.
KnapsackPlan closed_form_knapsack_plan(const KnapsackInstance& inst);

struct KnapsackFeasibilityReport {
  // max of c_sigma(i) - (1 - c_sigma(i1) - sum_{j before i} c_sigma(j) mu_j)
  double max_violation_linear = 0.0;
  // max of c_sigma(i) - (1 - 2 S - c_sigma(i1) exp(-2 S / c_sigma(i1)))
  double max_violation_exponential = 0.0;
  // Entries outside [0, 1].
  double max_range_violation = 0.0;
  // Adjacent pairs breaking c_f non-increasing / c_b non-decreasing, as
  // "forward:i" or "backward:i" (i is the 0-based left index).
  std::vector<std::string> monotonicity_violations;
  // Orders where c_sigma(i1) == 0 made the exponential term a 0-denominator
  // limit (treated as 0 for positive prefix mass).
  std::vector<Order> zero_first_rate;

  double max_violation() const;
  bool feasible(double tol = 1e-9) const {
    return max_violation() <= tol && monotonicity_violations.empty();
  }
};

KnapsackFeasibilityReport check_knapsack_feasible(const SelectionPlan& plan,
                                                  const KnapsackInstance& inst);

// Exact finite-atom law of the accepted fill T before some element.
class FillDistribution {
 public:
  // Empty knapsack: T = 0 with probability 1.
  FillDistribution() { atoms_[0.0] = 1.0; }
  static FillDistribution empty() {
    FillDistribution out;
    out.atoms_.clear();
    return out;
  }

  const std::map<double, double>& atoms() const { return atoms_; }
  std::size_t atom_count() const { return atoms_.size(); }

  // Adds mass at `t`, merging with an existing atom within kFillTolerance.
  void add(double t, double mass);

  double total_mass() const;
  double mean() const;
  double prob_zero() const;
  // Pr[0 < T <= hi].
  double prob_positive_at_most(double hi) const;
  // Pr[lo < T <= hi]; both ends absorb kFillTolerance, so an atom within
  // the tolerance of lo or hi counts as lying at that end.
  double prob_between(double lo, double hi) const;

 private:
  std::map<double, double> atoms_;
};

// Bernoulli parameters for one (element, size atom): accept with
// `if_positive` when 0 < T <= 1 - s, with `if_zero` when T == 0.
struct AcceptanceRule {
  double size = 0.0;
  double if_positive = 0.0;
  double if_zero = 0.0;
  double prob_zero = 0.0;      // Pr[T = 0] used to derive the rule
  double prob_positive = 0.0;  // Pr[0 < T <= 1 - s] used to derive the rule
};

// Bernoulli parameter the rule applies at current fill t (0 when s no
// longer fits).
double acceptance_probability(const AcceptanceRule& rule, double fill);

struct PropagationStep {
  FillDistribution next;
  std::vector<AcceptanceRule> rules;  // one per size atom, in law order
  std::vector<double> rates;          // Pr[accept | S = s], one per size atom
};

// Pushes the fill law through one element with target rate c. Throws
// InfeasibleError when c > Pr[T = 0] + Pr[0 < T <= 1 - s] + 1e-9 for some
// size s.
PropagationStep propagate_fill(const FillDistribution& dist, const SizeLaw& law,
                               double c);

struct InvariantViolationRecord {
  std::size_t step = 0;
  std::size_t element = 0;
  Order order = Order::kForward;
  std::string kind;  // "anti-concentration", "zero-mass", "mean", "mass"
  double b = 0.0;    // grid point, anti-concentration only
  double lhs = 0.0;
  double rhs = 0.0;
};

struct InvariantReport {
  std::vector<InvariantViolationRecord> violations;
  std::size_t checks = 0;
  bool first_rate_zero = false;
};

// Checks, for the fill law in front of an element with target rate c:
//   Pr[0 < T <= b] / c_first <= exp(-Pr[b < T <= 1-b] / c_first)  for b in grid
//   Pr[T = 0] >= c
// Records land in `report` tagged with (step, element, order).
void monitor_invariants(const FillDistribution& dist, double c_first, double c,
                        const std::vector<double>& b_grid, std::size_t step,
                        std::size_t element, Order order, InvariantReport& report,
                        double tol = 1e-9);

std::vector<double> default_b_grid();  // {0.05, 0.10, ..., 0.50}

struct KnapsackSchedule {
  // rules[order][element][atom]
  std::vector<std::vector<AcceptanceRule>> forward;
  std::vector<std::vector<AcceptanceRule>> backward;

  const std::vector<std::vector<AcceptanceRule>>& rules(Order order) const {
    return order == Order::kForward ? forward : backward;
  }
};

struct KnapsackExactOptions {
  bool monitor = true;
  std::vector<double> b_grid = default_b_grid();
};

struct KnapsackExactResult {
  // rates[order][element][atom] = Pr[A_i | S_i = s, order]
  std::vector<std::vector<double>> rates_forward;
  std::vector<std::vector<double>> rates_backward;
  FillDistribution final_forward;
  FillDistribution final_backward;
  KnapsackSchedule schedule;
  InvariantReport invariants;
  std::size_t max_atoms = 0;

  const std::vector<std::vector<double>>& rates(Order order) const {
    return order == Order::kForward ? rates_forward : rates_backward;
  }
  // Per-element rate, order-conditioned; elements without size atoms get
  // the plan value they were asked for (no event to condition on).
  SelectionPlan element_rates(const SelectionPlan& plan) const;
  // Largest |rate(order, i, s) - c_order(i)| over every atom.
  double max_deviation(const SelectionPlan& plan) const;
};

KnapsackExactResult run_knapsack_exact(const KnapsackInstance& inst,
                                       const SelectionPlan& plan,
                                       const KnapsackExactOptions& options = {});

// One execution of the online scheme under a fixed schedule.
struct KnapsackRun {
  Order order = Order::kForward;
  std::vector<bool> active;
  std::vector<double> size;  // realized sizes, valid where active
  std::vector<bool> accepted;
  double fill = 0.0;
};

KnapsackRun run_knapsack_once(const KnapsackInstance& inst,
                              const KnapsackSchedule& schedule, RngStream& rng);

// Estimates the Bernoulli schedule from a pool of `replicas` sampled
// histories per order instead of exact fill laws.
KnapsackSchedule sampled_schedule(const KnapsackInstance& inst,
                                  const SelectionPlan& plan, std::size_t replicas,
                                  std::uint64_t seed);

struct KnapsackMcEstimates {
  std::vector<sim::RateEstimate> forward;
  std::vector<sim::RateEstimate> backward;
  std::vector<sim::RateEstimate> pooled;
  std::uint64_t capacity_violations = 0;

  void merge(const KnapsackMcEstimates& other);
};

struct KnapsackMcOptions {
  std::size_t replicas = 10'000;
};

KnapsackMcEstimates run_knapsack_mc(const KnapsackInstance& inst,
                                    const SelectionPlan& plan,
                                    const sim::TrialConfig& config,
                                    const KnapsackMcOptions& options = {});

}  // namespace fbcrs
