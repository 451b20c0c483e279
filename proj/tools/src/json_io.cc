#include "fbcrs/cli/json_io.h"

#include <fstream>
#include <stdexcept>

#include "fbcrs/error.h"

namespace fbcrs::cli {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double as_number(const json& j, const char* what) {
  if (!j.is_number()) throw InputError(std::string(what) + " must be a number");
  return j.get<double>();
}

std::vector<double> as_numbers(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) out.push_back(as_number(v, what));
  return out;
}

std::vector<Atom> as_atoms(const json& j) {
  if (!j.is_array()) throw InputError("'atoms' must be an array of [value, p] pairs");
  std::vector<Atom> out;
  for (const json& pair : j) {
    if (!pair.is_array() || pair.size() != 2) {
      throw InputError("each atom must be a [value, p] pair");
    }
    out.push_back({as_number(pair[0], "atom value"), as_number(pair[1], "atom probability")});
  }
  return out;
}

json atoms_to_json(const std::vector<Atom>& atoms) {
  json out = json::array();
  for (const Atom& a : atoms) out.push_back(json::array({a.value, a.probability}));
  return out;
}

void check_n(const json& j, std::size_t n) {
  if (!j.contains("n")) return;
  const json& v = j.at("n");
  if (!v.is_number_integer() || v.get<long long>() != static_cast<long long>(n)) {
    throw InputError("'n' does not match the number of elements");
  }
}

}  // namespace

Instance instance_from_json(const json& j) {
  const json& kind = require(j, "kind");
  if (!kind.is_string()) throw InputError("'kind' must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "single_unit") {
    std::vector<double> x = as_numbers(require(j, "x"), "x");
    check_n(j, x.size());
    return SingleUnitInstance(std::move(x));
  }
  if (k == "knapsack") {
    const json& laws = require(j, "laws");
    if (!laws.is_array()) throw InputError("'laws' must be an array");
    std::vector<SizeLaw> out;
    for (const json& law : laws) {
      out.emplace_back(as_atoms(require(law, "atoms")),
                       as_number(require(law, "inactive"), "inactive"));
    }
    check_n(j, out.size());
    return KnapsackInstance(std::move(out));
  }
  if (k == "rationing") {
    const json& demands = require(j, "demands");
    const json& service = require(j, "service");
    if (!demands.is_array() || !service.is_array()) {
      throw InputError("'demands' and 'service' must be arrays");
    }
    std::vector<DemandLaw> laws;
    for (const json& d : demands) laws.emplace_back(as_atoms(require(d, "atoms")));
    std::vector<ServiceType> types;
    for (const json& s : service) {
      if (!s.is_string()) throw InputError("service tags must be strings");
      types.push_back(parse_service_type(s.get<std::string>()));
    }
    check_n(j, laws.size());
    return RationingInstance(std::move(laws), std::move(types));
  }
  throw InputError("unknown instance kind '" + k + "'");
}

json instance_to_json(const Instance& inst) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        json out;
        if constexpr (std::is_same_v<T, SingleUnitInstance>) {
          out["kind"] = "single_unit";
          out["n"] = v.size();
          out["x"] = v.x();
        } else if constexpr (std::is_same_v<T, KnapsackInstance>) {
          out["kind"] = "knapsack";
          out["n"] = v.size();
          json laws = json::array();
          for (const SizeLaw& law : v.laws()) {
            laws.push_back({{"atoms", atoms_to_json(law.atoms())},
                            {"inactive", law.inactive_mass()}});
          }
          out["laws"] = std::move(laws);
        } else {
          out["kind"] = "rationing";
          out["n"] = v.size();
          json demands = json::array();
          for (const DemandLaw& law : v.demands()) {
            demands.push_back({{"atoms", atoms_to_json(law.atoms())}});
          }
          out["demands"] = std::move(demands);
          json service = json::array();
          for (ServiceType t : v.service()) service.push_back(to_string(t));
          out["service"] = std::move(service);
        }
        return out;
      },
      inst);
}

const char* kind_name(const Instance& inst) {
  switch (inst.index()) {
    case 0:
      return "single_unit";
    case 1:
      return "knapsack";
    default:
      return "rationing";
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

Instance read_instance(const std::string& path) {
  return instance_from_json(read_json_file(path));
}

SelectionPlan plan_from_json(const json& j) {
  SelectionPlan plan;
  plan.c_forward = as_numbers(require(j, "c_f"), "c_f");
  plan.c_backward = as_numbers(require(j, "c_b"), "c_b");
  if (plan.c_forward.size() != plan.c_backward.size()) {
    throw InputError("'c_f' and 'c_b' differ in length");
  }
  return plan;
}

json plan_to_json(const SelectionPlan& plan) {
  return {{"c_f", plan.c_forward}, {"c_b", plan.c_backward}};
}

std::vector<double> beta_from_json(const json& j) {
  if (j.is_array()) return as_numbers(j, "beta");
  return as_numbers(require(j, "beta"), "beta");
}

}  // namespace fbcrs::cli
