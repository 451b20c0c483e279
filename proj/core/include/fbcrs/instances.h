#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbcrs/rng.h"

namespace fbcrs {

// Absolute tolerance for every probability-mass comparison made when
// validating inputs. Constructors reject, never renormalize.
inline constexpr double kMassTolerance = 1e-12;

// Running Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    carry_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double compensated_sum(std::span<const double> values);

enum class Order { kForward, kBackward };

inline constexpr Order kBothOrders[] = {Order::kForward, Order::kBackward};

const char* to_string(Order order);

// One of the two arrival orders over elements 0..n-1. Positions are
// 0-based: forward maps i -> i, backward maps i -> n-1-i, so
// position(forward, i) + position(backward, i) == n - 1.
class Permutation {
 public:
  Permutation(Order order, std::size_t n) : order_(order), n_(n) {}

  Order order() const { return order_; }
  std::size_t size() const { return n_; }

  std::size_t position(std::size_t element) const {
    return order_ == Order::kForward ? element : n_ - 1 - element;
  }
  // The element arriving at 0-based step `k`; the map is an involution.
  std::size_t element_at(std::size_t k) const { return position(k); }
  // True when `a` arrives strictly before `b`.
  bool before(std::size_t a, std::size_t b) const {
    return position(a) < position(b);
  }
  // The first arrival (i1 in the knapsack feasibility constraints).
  std::size_t first() const { return element_at(0); }

 private:
  Order order_;
  std::size_t n_;
};

// Single-unit input: element i is active (size 1) with probability x[i].
class SingleUnitInstance {
 public:
  explicit SingleUnitInstance(std::vector<double> x);

  std::size_t size() const { return x_.size(); }
  const std::vector<double>& x() const { return x_; }
  double x(std::size_t i) const { return x_[i]; }
  double rho() const { return rho_; }

  // Same masses in reverse index order.
  SingleUnitInstance reversed() const;

 private:
  std::vector<double> x_;
  double rho_;
};

struct Atom {
  double value;
  double probability;
  friend bool operator==(const Atom&, const Atom&) = default;
};

// Finite-support size law on [0, 1] plus the inactive symbol.
class SizeLaw {
 public:
  SizeLaw(std::vector<Atom> atoms, double inactive_mass);

  // Active with probability `p` at the single size `size`.
  static SizeLaw bernoulli(double size, double p);

  const std::vector<Atom>& atoms() const { return atoms_; }
  double inactive_mass() const { return inactive_mass_; }
  double active_mass() const;
  // E[S * 1(S < inf)].
  double mean() const;

  friend bool operator==(const SizeLaw&, const SizeLaw&) = default;

 private:
  std::vector<Atom> atoms_;
  double inactive_mass_;
};

class KnapsackInstance {
 public:
  explicit KnapsackInstance(std::vector<SizeLaw> laws);

  std::size_t size() const { return laws_.size(); }
  const std::vector<SizeLaw>& laws() const { return laws_; }
  const SizeLaw& law(std::size_t i) const { return laws_[i]; }
  const std::vector<double>& mu() const { return mu_; }
  double mu(std::size_t i) const { return mu_[i]; }
  double total_mu() const;

 private:
  std::vector<SizeLaw> laws_;
  std::vector<double> mu_;
};

// Finite-support demand law on [0, inf). Atoms are sorted by demand and
// distinct; cumulative masses are cached for quantile lookups.
class DemandLaw {
 public:
  explicit DemandLaw(std::vector<Atom> atoms);

  static DemandLaw point_mass(double demand);

  const std::vector<Atom>& atoms() const { return atoms_; }
  // cumulative()[k] = Pr[D <= atoms()[k].value].
  const std::vector<double>& cumulative() const { return cumulative_; }
  double mean() const { return mean_; }
  double cdf(double d) const;
  // inf{d : q <= F(d)}; q = 0 yields the smallest atom.
  double inverse_cdf(double q) const;
  // Index of the atom returned by inverse_cdf(q).
  std::size_t atom_index(double q) const;
  // Quantile interval [lo, hi] mapped onto atom k.
  std::pair<double, double> quantile_range(std::size_t k) const;
  // Demand atoms at exactly 0 are legal (Type-III treats 0/0 as 1) but
  // flagged so callers can report them.
  bool has_zero_atom() const { return !atoms_.empty() && atoms_[0].value == 0.0; }

  friend bool operator==(const DemandLaw& a, const DemandLaw& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  double mean_;
};

enum class ServiceType { kTypeI, kTypeII, kTypeIII };

const char* to_string(ServiceType type);
ServiceType parse_service_type(const std::string& text);

class RationingInstance {
 public:
  RationingInstance(std::vector<DemandLaw> demands,
                    std::vector<ServiceType> service);

  std::size_t size() const { return demands_.size(); }
  const std::vector<DemandLaw>& demands() const { return demands_; }
  const DemandLaw& demand(std::size_t i) const { return demands_[i]; }
  const std::vector<ServiceType>& service() const { return service_; }
  ServiceType service(std::size_t i) const { return service_[i]; }
  bool has_type_one() const;

 private:
  std::vector<DemandLaw> demands_;
  std::vector<ServiceType> service_;
};

// Free-function spelling of DemandLaw::inverse_cdf.
inline double inverse_cdf(const DemandLaw& law, double q) {
  return law.inverse_cdf(q);
}

struct QuantileDraw {
  double quantile;
  double demand;
};

// Quantile first, demand second: Q ~ U[0, 1], D = F^{-1}(Q).
QuantileDraw draw_quantile_demand(const DemandLaw& law, RngStream& rng);

// Splits element k (0-based) into two adjacent halves of its mass.
SingleUnitInstance split_element(const SingleUnitInstance& inst, std::size_t k);

struct HardnessPair {
  KnapsackInstance knapsack;
  SingleUnitInstance single_unit;
  double rho;
};

// 2n+1 elements of size 1/2 + 1/n, each active w.p. rho/(2n+1) with
// rho = 2n/(n+2). Requires n >= 2 so that the size stays within [0, 1].
HardnessPair knapsack_hardness_instance(std::size_t n);

}  // namespace fbcrs
