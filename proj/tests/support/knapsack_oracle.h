#pragma once

#include <cstddef>
#include <vector>

#include "fbcrs/instances.h"
#include "fbcrs/knapsack.h"

namespace fbcrs::testing {

// Pr[accept i | S_i = atom a, order] by enumerating every activation/size
// outcome and both acceptance bits (one for an empty knapsack, one for a
// partly filled one) of every element. Exponential in n; meant for n <= 3.
inline std::vector<std::vector<double>> enumerate_knapsack_rates(
    const KnapsackInstance& inst, const KnapsackSchedule& schedule, Order order) {
  const std::size_t n = inst.size();
  const Permutation perm(order, n);
  const auto& rules = schedule.rules(order);
  // Outcome per element: 0 = inactive, 1 + a = size atom a.
  std::vector<std::size_t> radix(n);
  for (std::size_t i = 0; i < n; ++i) radix[i] = inst.law(i).atoms().size() + 1;

  std::vector<std::vector<double>> hit(n), mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    hit[i].assign(inst.law(i).atoms().size(), 0.0);
    mass[i].assign(inst.law(i).atoms().size(), 0.0);
  }

  std::vector<std::size_t> outcome(n, 0);
  for (;;) {
    double w_sizes = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const SizeLaw& law = inst.law(i);
      w_sizes *= outcome[i] == 0 ? law.inactive_mass() : law.atoms()[outcome[i] - 1].probability;
    }
    for (unsigned bits = 0; bits < (1u << (2 * n)); ++bits) {
      double w = w_sizes;
      double fill = 0.0;
      std::vector<bool> accepted(n, false);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = perm.element_at(k);
        const bool b_zero = bits >> (2 * i) & 1u;
        const bool b_pos = bits >> (2 * i + 1) & 1u;
        if (outcome[i] == 0) {
          // Bits of an inactive element are never read; count them once.
          if (b_zero || b_pos) w = 0.0;
          continue;
        }
        const AcceptanceRule& rule = rules[i][outcome[i] - 1];
        w *= (b_zero ? rule.if_zero : 1.0 - rule.if_zero) *
             (b_pos ? rule.if_positive : 1.0 - rule.if_positive);
        const double s = rule.size;
        bool take = false;
        if (fill <= kFillTolerance) {
          take = b_zero;
        } else if (fill + s <= 1.0 + kFillTolerance) {
          take = b_pos;
        }
        if (take) {
          accepted[i] = true;
          fill += s;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (outcome[i] == 0) continue;
        mass[i][outcome[i] - 1] += w;
        if (accepted[i]) hit[i][outcome[i] - 1] += w;
      }
    }
    std::size_t d = 0;
    while (d < n && ++outcome[d] == radix[d]) outcome[d++] = 0;
    if (d == n) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < hit[i].size(); ++a) {
      hit[i][a] = mass[i][a] > 0.0 ? hit[i][a] / mass[i][a] : 0.0;
    }
  }
  return hit;
}

}  // namespace fbcrs::testing
