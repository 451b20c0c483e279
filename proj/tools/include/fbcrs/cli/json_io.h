#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fbcrs/instances.h"
#include "fbcrs/lp_si.h"

namespace fbcrs::cli {

using Instance = std::variant<SingleUnitInstance, KnapsackInstance, RationingInstance>;

// {"kind": "single_unit", "n": 3, "x": [...]}
// {"kind": "knapsack", "n": 2, "laws": [{"atoms": [[size, p], ...], "inactive": p}, ...]}
// {"kind": "rationing", "n": 2, "demands": [{"atoms": [[d, p], ...]}, ...],
//  "service": ["I" | "II" | "III", ...]}
// "n" is optional on input and checked when present. Throws InputError on
// any schema or domain problem.
Instance instance_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const Instance& inst);

const char* kind_name(const Instance& inst);

// Reads and parses a JSON file; I/O failures throw std::runtime_error,
// malformed JSON throws InputError.
nlohmann::json read_json_file(const std::string& path);
Instance read_instance(const std::string& path);

// {"c_f": [...], "c_b": [...]}
SelectionPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const SelectionPlan& plan);

// A bare array or {"beta": [...]}.
std::vector<double> beta_from_json(const nlohmann::json& j);

}  // namespace fbcrs::cli
