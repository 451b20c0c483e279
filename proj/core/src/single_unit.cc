#include "fbcrs/single_unit.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbcrs/error.h"

namespace fbcrs {

namespace {

constexpr double kDomainSlack = 1e-12;
constexpr double kParamSlack = 1e-9;

// Prefix masses x_sigma(i) for both orders; backward uses suffix sums.
std::vector<double> mass_before(const SingleUnitInstance& inst, Order order) {
  const std::size_t n = inst.size();
  const Permutation perm(order, n);
  std::vector<double> out(n, 0.0);
  CompensatedSum seen;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = perm.element_at(k);
    out[i] = seen.value();
    seen.add(inst.x(i));
  }
  return out;
}

}  // namespace

PhiCurve::PhiCurve(double rho)
    : rho_(rho), denom_(1.0 + std::exp(rho / 2.0) * rho), half_exp_(std::exp(rho / 2.0)) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InputError("phi requires rho >= 0");
}

double PhiCurve::operator()(double z) const {
  if (!(z >= -kDomainSlack && z <= rho_ + kDomainSlack)) {
    throw InputError("phi is defined on [0, rho]");
  }
  if (z <= rho_ / 2.0) return (2.0 * half_exp_ - std::exp(z)) / denom_;
  return std::exp(rho_ - z) / denom_;
}

double PhiCurve::integral(double a, double b) const {
  if (!(a >= -kDomainSlack && b <= rho_ + kDomainSlack && a <= b)) {
    throw InputError("phi integral bounds must satisfy 0 <= a <= b <= rho");
  }
  const double mid = rho_ / 2.0;
  double total = 0.0;
  // Lower branch: int (2e^{rho/2} - e^t) dt = 2e^{rho/2}(hi-lo) - e^lo expm1(hi-lo).
  if (a < mid) {
    const double hi = std::min(b, mid);
    total += 2.0 * half_exp_ * (hi - a) - std::exp(a) * std::expm1(hi - a);
  }
  // Upper branch: int e^{rho-t} dt = -e^{rho-lo} expm1(-(hi-lo)).
  if (b > mid) {
    const double lo = std::max(a, mid);
    total += -std::exp(rho_ - lo) * std::expm1(-(b - lo));
  }
  return total / denom_;
}

double PhiCurve::average(double a, double width) const {
  if (width <= 0.0) return (*this)(std::min(a, rho_));
  return integral(a, std::min(a + width, rho_)) / width;
}

double phi(double z, double rho) { return PhiCurve(rho)(z); }

SelectionPlan closed_form_plan(const SingleUnitInstance& inst) {
  const PhiCurve curve(inst.rho());
  SelectionPlan plan;
  for (Order order : kBothOrders) {
    const std::vector<double> before = mass_before(inst, order);
    std::vector<double>& c = order == Order::kForward ? plan.c_forward : plan.c_backward;
    c.resize(inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const double start = std::min(before[i], inst.rho());
      c[i] = std::clamp(curve.average(start, inst.x(i)), 0.0, 1.0);
    }
  }
  return plan;
}

BernoulliSchedule bernoulli_schedule(const SingleUnitInstance& inst,
                                     const SelectionPlan& plan) {
  const std::size_t n = inst.size();
  if (plan.size() != n || plan.c_backward.size() != n) {
    throw InputError("plan and instance sizes differ");
  }
  BernoulliSchedule out;
  out.forward.resize(n);
  out.backward.resize(n);
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& c = plan.c(order);
    auto& p = order == Order::kForward ? out.forward : out.backward;
    double consumed = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      const double room = 1.0 - consumed;
      if (room <= 0.0 || c[i] <= 0.0) {
        if (c[i] > kParamSlack) {
          std::ostringstream msg;
          msg << "plan asks for c = " << c[i] << " at element " << i
              << " after all acceptance mass is consumed";
          throw InfeasibleError(msg.str());
        }
        if (room <= 0.0) out.zero_over_zero.push_back(i);
        p[i] = 0.0;
      } else {
        const double param = c[i] / room;
        if (param > 1.0 + kParamSlack) {
          std::ostringstream msg;
          msg << "Bernoulli parameter " << param << " > 1 at element " << i << " ("
              << to_string(order) << ")";
          throw InfeasibleError(msg.str());
        }
        p[i] = std::clamp(param, 0.0, 1.0);
      }
      consumed += inst.x(i) * c[i];
    }
  }
  return out;
}

CrsRunResult run_single_unit(const SingleUnitInstance& inst,
                             const BernoulliSchedule& schedule, RngStream& rng) {
  const std::size_t n = inst.size();
  CrsRunResult run;
  run.order = rng.bernoulli(0.5) ? Order::kForward : Order::kBackward;
  run.active.resize(n);
  const Permutation perm(run.order, n);
  const auto& p = schedule.params(run.order);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = perm.element_at(k);
    const bool active = rng.bernoulli(inst.x(i));
    const bool bit = rng.bernoulli(p[i]);
    run.active[i] = active;
    if (active && bit && !run.accepted) run.accepted = i;
  }
  return run;
}

CrsRunResult run_single_unit(const SingleUnitInstance& inst,
                             const SelectionPlan& plan, RngStream& rng) {
  return run_single_unit(inst, bernoulli_schedule(inst, plan), rng);
}

SelectionPlan exact_selection_rates(const SingleUnitInstance& inst,
                                    const SelectionPlan& plan) {
  const BernoulliSchedule schedule = bernoulli_schedule(inst, plan);
  const std::size_t n = inst.size();
  SelectionPlan rates;
  for (Order order : kBothOrders) {
    const Permutation perm(order, n);
    const auto& p = schedule.params(order);
    auto& r = order == Order::kForward ? rates.c_forward : rates.c_backward;
    r.resize(n);
    double none_yet = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = perm.element_at(k);
      r[i] = none_yet * p[i];
      none_yet *= 1.0 - inst.x(i) * p[i];
    }
  }
  return rates;
}

void SingleUnitEstimates::merge(const SingleUnitEstimates& other) {
  auto merge_all = [](std::vector<sim::RateEstimate>& a,
                      const std::vector<sim::RateEstimate>& b) {
    if (a.size() < b.size()) a.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) a[i].merge(b[i]);
  };
  merge_all(forward, other.forward);
  merge_all(backward, other.backward);
  merge_all(pooled, other.pooled);
  inactive_acceptances += other.inactive_acceptances;
}

SingleUnitEstimates simulate_single_unit(const SingleUnitInstance& inst,
                                         const SelectionPlan& plan,
                                         const sim::TrialConfig& config) {
  const BernoulliSchedule schedule = bernoulli_schedule(inst, plan);
  const std::size_t n = inst.size();
  SingleUnitEstimates init;
  init.forward.resize(n);
  init.backward.resize(n);
  init.pooled.resize(n);
  return sim::run_trials(config, init,
                         [&](std::uint64_t, RngStream& rng, SingleUnitEstimates& acc) {
                           const CrsRunResult run = run_single_unit(inst, schedule, rng);
                           auto& by_order =
                               run.order == Order::kForward ? acc.forward : acc.backward;
                           if (run.accepted && !run.active[*run.accepted]) {
                             ++acc.inactive_acceptances;
                           }
                           for (std::size_t i = 0; i < n; ++i) {
                             if (!run.active[i]) continue;
                             const bool hit = run.accepted == i;
                             by_order[i].record(hit);
                             acc.pooled[i].record(hit);
                           }
                         });
}

}  // namespace fbcrs
