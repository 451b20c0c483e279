#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbcrs/instances.h"
#include "fbcrs/knapsack.h"
#include "fbcrs/lp_si.h"
#include "fbcrs/rng.h"
#include "fbcrs/sim.h"

namespace fbcrs {

// I: 1(y >= d).  II: min(y, d) / mu.  III: min(y, d) / d with 0/0 = 1.
double service_value(ServiceType type, double y, double d, double mu);

// int_0^q min(F^{-1}(u), 1) du.
double supply_integral(const DemandLaw& law, double q);
// int_0^q s(min(F^{-1}(u), 1), F^{-1}(u)) du for the given service type.
double service_integral(const DemandLaw& law, ServiceType type, double q);

// Smallest q in [0, 1] with service_integral(law, type, q) == beta. Throws
// InfeasibleError when beta exceeds service_integral(law, type, 1) + 1e-10.
double solve_q_for_beta(const DemandLaw& law, ServiceType type, double beta);

struct ServiceTarget {
  std::vector<double> beta;
  std::vector<double> q;
  std::vector<double> x;  // supply integrals, the CRS activeness inputs

  std::size_t size() const { return beta.size(); }
};

enum class ExAnteStatus { kFeasible, kAgentInfeasible, kSupplyExceeded };

const char* to_string(ExAnteStatus status);

struct ExAnteResult {
  ExAnteStatus status = ExAnteStatus::kFeasible;
  std::optional<ServiceTarget> target;  // set iff feasible
  double total_supply = 0.0;            // sum of x, when every agent solved
  std::optional<std::size_t> failing_agent;
  std::string message;
};

inline constexpr double kSupplySlack = 1e-10;

ExAnteResult exante_check(const RationingInstance& inst, const std::vector<double>& beta);

// Largest uniform beta with exante_check(beta * 1) feasible, to 1e-9.
double max_uniform_beta(const RationingInstance& inst);

// Single-unit CRS input (n, x) induced by a target.
SingleUnitInstance induced_single_unit(const ServiceTarget& target);

// A quantile slice [lo, hi] of the active region Q <= q with constant
// demand d.
struct DemandSegment {
  double demand;
  double weight;  // hi - lo
};

// Active slices for threshold q (zero-width slices dropped).
std::vector<DemandSegment> active_segments(const DemandLaw& law, double q);
// The complementary slices over (q, 1].
std::vector<DemandSegment> inactive_segments(const DemandLaw& law, double q);

// Finite-atom law of remaining supply in front of an agent.
class RemDistribution {
 public:
  // Full supply: Rem = 1 with probability 1.
  RemDistribution() { atoms_[1.0] = 1.0; }
  static RemDistribution empty() {
    RemDistribution out;
    out.atoms_.clear();
    return out;
  }
  // Empirical law of equally weighted replicas.
  static RemDistribution from_samples(const std::vector<double>& values);

  const std::map<double, double>& atoms() const { return atoms_; }
  std::size_t atom_count() const { return atoms_.size(); }
  // Adds mass at r, merging with an atom within 1e-12.
  void add(double r, double mass);
  double total_mass() const;
  double mean() const;
  // E[min(R, c)].
  double expected_min(double c) const;

 private:
  std::map<double, double> atoms_;
};

// E_Rem[sum_k w_k min(d_k, Rem, tau)] over the active slices.
double expected_allocation(const std::vector<DemandSegment>& active,
                           const RemDistribution& rem, double tau);

// Smallest tau in [0, 1] with expected_allocation == target. The map is
// piecewise linear in tau with breakpoints at the demands and at the Rem
// atoms, so the root is found exactly on the bracketing segment. Throws
// InvariantViolation when target exceeds the value at tau = 1 by more than
// 1e-10.
double calibrate_tau(const DemandLaw& law, double q, const RemDistribution& rem,
                     double target);

enum class RationingMode { kExact, kMonteCarlo };
enum class ReductionPath { kSingleUnit, kKnapsack };

const char* to_string(RationingMode mode);
const char* to_string(ReductionPath path);

struct RationingOptions {
  RationingMode mode = RationingMode::kExact;
  sim::TrialConfig trials{};
  // Exact Rem propagation switches to a sampled pool of `sample_size`
  // replicas once any law exceeds `atom_cap` atoms.
  std::size_t atom_cap = 100'000;
  std::size_t sample_size = 10'000;
  // Number of leading MC trials whose allocations are kept verbatim.
  std::size_t keep_traces = 0;
};

struct AllocationTrace {
  Order order = Order::kForward;
  std::vector<double> quantile;
  std::vector<double> demand;
  std::vector<double> allocation;
  std::vector<double> service;
};

struct AgentReport {
  double beta = 0.0;
  double q = 0.0;
  double x = 0.0;
  double c_forward = 0.0;
  double c_backward = 0.0;
  // Single-unit path only; NaN on the knapsack path.
  double tau_forward = 0.0;
  double tau_backward = 0.0;
  // E[Y | order], exact on both paths.
  double allocation_forward = 0.0;
  double allocation_backward = 0.0;
  // E[s(Y, D)]: exact value in exact mode, sample mean in MC mode.
  double expected_service = 0.0;
  double half_width = 0.0;  // MC only
  double bound = 0.0;       // (c_f + c_b) / 2 * beta
  double slack() const { return expected_service - bound; }
};

struct RationingResult {
  ReductionPath path = ReductionPath::kSingleUnit;
  RationingMode mode = RationingMode::kExact;
  std::vector<AgentReport> agents;
  // max |E[Y | order] - c x| over agents and orders.
  double max_allocation_error = 0.0;
  // Steps where E[int min(F^{-1}, Rem)] fell below (1 - sum c x) x - 1e-10.
  std::size_t worst_case_rem_violations = 0;
  bool sampled_rem = false;
  std::size_t max_rem_atoms = 0;
  std::uint64_t overdraws = 0;
  std::vector<AllocationTrace> traces;
  std::vector<std::string> notes;
};

// Type-I agents present: each agent becomes a knapsack element of size
// min(D, 1) that is active when Q <= q.
struct KnapsackReduction {
  KnapsackInstance knapsack;
  // segment_atom[i][k]: size-atom index of active slice k of agent i.
  std::vector<std::vector<std::size_t>> segment_atom;
};

KnapsackReduction knapsack_reduction(const RationingInstance& inst,
                                     const ServiceTarget& target);

// Dispatches on the instance: single-unit path when every agent is of Type
// II or III, knapsack path otherwise. `plan` must be a plan for the induced
// single-unit instance or for the knapsack reduction respectively. Throws
// InvariantViolation on calibration failure or supply overdraw.
RationingResult run_rationing(const RationingInstance& inst, const ServiceTarget& target,
                              const SelectionPlan& plan,
                              const RationingOptions& options = {});

}  // namespace fbcrs
