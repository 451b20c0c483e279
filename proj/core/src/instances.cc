#include "fbcrs/instances.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbcrs/error.h"

namespace fbcrs {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void check_atoms(const std::vector<Atom>& atoms, const char* what) {
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const Atom& a = atoms[k];
    if (!std::isfinite(a.value) || !(a.probability > 0.0) || a.probability > 1.0) {
      std::ostringstream msg;
      msg << what << " atom " << k << " is malformed (value " << a.value
          << ", probability " << a.probability << ")";
      throw InputError(msg.str());
    }
    if (k > 0 && !(atoms[k - 1].value < a.value)) {
      throw InputError(std::string(what) + " atoms must be sorted and distinct");
    }
  }
}

}  // namespace

double compensated_sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

const char* to_string(Order order) {
  return order == Order::kForward ? "forward" : "backward";
}

SingleUnitInstance::SingleUnitInstance(std::vector<double> x) : x_(std::move(x)) {
  if (x_.empty()) throw InputError("single-unit instance needs n >= 1");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!is_probability(x_[i])) {
      std::ostringstream msg;
      msg << "x[" << i << "] = " << x_[i] << " is not a probability";
      throw InputError(msg.str());
    }
  }
  rho_ = compensated_sum(x_);
}

SingleUnitInstance SingleUnitInstance::reversed() const {
  return SingleUnitInstance(std::vector<double>(x_.rbegin(), x_.rend()));
}

SizeLaw::SizeLaw(std::vector<Atom> atoms, double inactive_mass)
    : atoms_(std::move(atoms)), inactive_mass_(inactive_mass) {
  check_atoms(atoms_, "size law");
  for (const Atom& a : atoms_) {
    if (a.value < 0.0 || a.value > 1.0) {
      throw InputError("size atoms must lie in [0, 1]");
    }
  }
  if (!is_probability(inactive_mass_)) {
    throw InputError("inactive mass must be a probability");
  }
  std::vector<double> masses;
  masses.reserve(atoms_.size() + 1);
  for (const Atom& a : atoms_) masses.push_back(a.probability);
  masses.push_back(inactive_mass_);
  if (std::abs(compensated_sum(masses) - 1.0) > kMassTolerance) {
    throw InputError("size law probabilities must sum to 1");
  }
}

SizeLaw SizeLaw::bernoulli(double size, double p) {
  if (p == 0.0) return SizeLaw({}, 1.0);
  return SizeLaw({{size, p}}, 1.0 - p);
}

double SizeLaw::active_mass() const {
  std::vector<double> masses;
  for (const Atom& a : atoms_) masses.push_back(a.probability);
  return compensated_sum(masses);
}

double SizeLaw::mean() const {
  std::vector<double> terms;
  for (const Atom& a : atoms_) terms.push_back(a.value * a.probability);
  return compensated_sum(terms);
}

KnapsackInstance::KnapsackInstance(std::vector<SizeLaw> laws)
    : laws_(std::move(laws)) {
  if (laws_.empty()) throw InputError("knapsack instance needs n >= 1");
  mu_.reserve(laws_.size());
  for (const SizeLaw& law : laws_) mu_.push_back(law.mean());
}

double KnapsackInstance::total_mu() const { return compensated_sum(mu_); }

DemandLaw::DemandLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InputError("demand law needs at least one atom");
  check_atoms(atoms_, "demand law");
  if (atoms_.front().value < 0.0) throw InputError("demands must be >= 0");
  CompensatedSum mass;
  std::vector<double> terms;
  cumulative_.reserve(atoms_.size());
  for (const Atom& a : atoms_) {
    mass.add(a.probability);
    terms.push_back(a.value * a.probability);
    cumulative_.push_back(mass.value());
  }
  if (std::abs(cumulative_.back() - 1.0) > kMassTolerance) {
    throw InputError("demand law probabilities must sum to 1");
  }
  mean_ = compensated_sum(terms);
  if (!(mean_ > 0.0)) throw InputError("demand law must have positive mean");
}

DemandLaw DemandLaw::point_mass(double demand) {
  return DemandLaw({{demand, 1.0}});
}

double DemandLaw::cdf(double d) const {
  double out = 0.0;
  for (std::size_t k = 0; k < atoms_.size() && atoms_[k].value <= d; ++k) {
    out = cumulative_[k];
  }
  return out;
}

std::size_t DemandLaw::atom_index(double q) const {
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), q);
  if (it == cumulative_.end()) return atoms_.size() - 1;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

double DemandLaw::inverse_cdf(double q) const {
  return atoms_[atom_index(q)].value;
}

std::pair<double, double> DemandLaw::quantile_range(std::size_t k) const {
  const double lo = k == 0 ? 0.0 : cumulative_[k - 1];
  const double hi = k + 1 == atoms_.size() ? 1.0 : cumulative_[k];
  return {lo, hi};
}

const char* to_string(ServiceType type) {
  switch (type) {
    case ServiceType::kTypeI:
      return "I";
    case ServiceType::kTypeII:
      return "II";
    case ServiceType::kTypeIII:
      return "III";
  }
  return "?";
}

ServiceType parse_service_type(const std::string& text) {
  if (text == "I" || text == "TypeI") return ServiceType::kTypeI;
  if (text == "II" || text == "TypeII") return ServiceType::kTypeII;
  if (text == "III" || text == "TypeIII") return ServiceType::kTypeIII;
  throw InputError("unknown service type '" + text + "'");
}

RationingInstance::RationingInstance(std::vector<DemandLaw> demands,
                                     std::vector<ServiceType> service)
    : demands_(std::move(demands)), service_(std::move(service)) {
  if (demands_.empty()) throw InputError("rationing instance needs n >= 1");
  if (demands_.size() != service_.size()) {
    throw InputError("one service type per agent is required");
  }
}

bool RationingInstance::has_type_one() const {
  return std::find(service_.begin(), service_.end(), ServiceType::kTypeI) !=
         service_.end();
}

QuantileDraw draw_quantile_demand(const DemandLaw& law, RngStream& rng) {
  const double q = rng.uniform();
  return {q, law.inverse_cdf(q)};
}

SingleUnitInstance split_element(const SingleUnitInstance& inst, std::size_t k) {
  if (k >= inst.size()) {
    throw InputError("split_element: index out of range");
  }
  std::vector<double> x;
  x.reserve(inst.size() + 1);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (i == k) {
      x.push_back(inst.x(i) / 2.0);
      x.push_back(inst.x(i) / 2.0);
    } else {
      x.push_back(inst.x(i));
    }
  }
  return SingleUnitInstance(std::move(x));
}

HardnessPair knapsack_hardness_instance(std::size_t n) {
  if (n < 2) {
    throw InputError("knapsack_hardness_instance requires n >= 2 (size 1/2 + 1/n must be <= 1)");
  }
  const double nd = static_cast<double>(n);
  const double rho = 2.0 * nd / (nd + 2.0);
  const std::size_t count = 2 * n + 1;
  const double p = rho / static_cast<double>(count);
  const double size = 0.5 + 1.0 / nd;
  std::vector<SizeLaw> laws(count, SizeLaw::bernoulli(size, p));
  return HardnessPair{KnapsackInstance(std::move(laws)),
                      SingleUnitInstance(std::vector<double>(count, p)), rho};
}

}  // namespace fbcrs
