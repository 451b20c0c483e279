#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fbcrs/instances.h"
#include "fbcrs/lp_si.h"
#include "fbcrs/rng.h"
#include "fbcrs/sim.h"

namespace fbcrs {

// The limiting selection curve on [0, rho]:
//   (2e^{rho/2} - e^z) / (1 + e^{rho/2} rho)   for z <= rho/2,
//   e^{rho - z} / (1 + e^{rho/2} rho)           for z >  rho/2.
class PhiCurve {
 public:
  explicit PhiCurve(double rho);

  double rho() const { return rho_; }
  double operator()(double z) const;
  // Exact integral over [a, b] within [0, rho] (exponential antiderivative,
  // split at rho/2).
  double integral(double a, double b) const;
  // Mean value over [a, a + width]; the point value when width == 0.
  double average(double a, double width) const;

 private:
  double rho_;
  double denom_;
  double half_exp_;  // e^{rho/2}
};

double phi(double z, double rho);

// c_sigma(i) = average of phi over [x_sigma(i), x_sigma(i) + x_i], where
// x_sigma(i) is the mass arriving before i. Zero-mass elements receive
// phi(x_sigma(i)).
SelectionPlan closed_form_plan(const SingleUnitInstance& inst);

// Bernoulli parameters c_sigma(i) / (1 - sum_{j before i} x_j c_sigma(j)).
struct BernoulliSchedule {
  std::vector<double> forward;
  std::vector<double> backward;
  // Elements whose parameter was the 0/0 case (all prior mass consumed and
  // c = 0); the parameter is defined as 0 there.
  std::vector<std::size_t> zero_over_zero;

  const std::vector<double>& params(Order order) const {
    return order == Order::kForward ? forward : backward;
  }
};

// Throws InfeasibleError if some parameter exceeds 1 + 1e-9; otherwise
// clamps into [0, 1].
BernoulliSchedule bernoulli_schedule(const SingleUnitInstance& inst,
                                     const SelectionPlan& plan);

struct CrsRunResult {
  std::optional<std::size_t> accepted;
  Order order = Order::kForward;
  std::vector<bool> active;
};

// One execution: draws the order, activations, and acceptance bits.
CrsRunResult run_single_unit(const SingleUnitInstance& inst,
                             const BernoulliSchedule& schedule, RngStream& rng);
CrsRunResult run_single_unit(const SingleUnitInstance& inst,
                             const SelectionPlan& plan, RngStream& rng);

// Conditional acceptance rates recomputed from the Bernoulli schedule via
// Pr[nothing accepted before i] = prod_{j before i} (1 - x_j p_j).
SelectionPlan exact_selection_rates(const SingleUnitInstance& inst,
                                    const SelectionPlan& plan);

struct SingleUnitEstimates {
  // Conditional on (element active, order sigma).
  std::vector<sim::RateEstimate> forward;
  std::vector<sim::RateEstimate> backward;
  // Conditional on element active, order averaged.
  std::vector<sim::RateEstimate> pooled;
  std::uint64_t inactive_acceptances = 0;

  void merge(const SingleUnitEstimates& other);
};

SingleUnitEstimates simulate_single_unit(const SingleUnitInstance& inst,
                                         const SelectionPlan& plan,
                                         const sim::TrialConfig& config);

}  // namespace fbcrs
