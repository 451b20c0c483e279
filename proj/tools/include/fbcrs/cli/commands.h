#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbcrs/cli/report.h"

namespace fbcrs::cli {

// --seed wins; otherwise FBCRS_SEED; otherwise 0. A malformed FBCRS_SEED
// is an InputError.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag);

Report cmd_constants();

struct LpSolveOptions {
  std::string instance;
  bool dual = false;
};
Report cmd_lp_solve(const LpSolveOptions& opt);

struct SimulateSingleUnitOptions {
  std::string instance;
  std::string plan = "lp";  // lp | closed | path to {"c_f", "c_b"}
  std::uint64_t trials = 100'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};
Report cmd_simulate_single_unit(const SimulateSingleUnitOptions& opt);

struct SimulateKnapsackOptions {
  std::string instance;
  std::string plan = "closed";  // closed | path to {"c_f", "c_b"}
  std::string mode = "exact";   // exact | mc
  std::uint64_t trials = 100'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t replicas = 10'000;
  bool monitor = false;
};
Report cmd_simulate_knapsack(const SimulateKnapsackOptions& opt);

struct RationOptions {
  std::string instance;
  std::string beta = "auto";  // auto | path to a JSON array
  std::string plan = "auto";  // auto | lp | closed
  std::string mode = "exact";
  std::uint64_t trials = 100'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};
Report cmd_ration(const RationOptions& opt);

struct DualCertificateOptions {
  std::size_t n = 11;
  double rho = 1.0;
};
Report cmd_dual_certificate(const DualCertificateOptions& opt);

struct SweepOptions {
  std::string kind = "lpopt";  // lpopt | dual-gap | knapsack-min
  std::vector<std::size_t> n;
  std::vector<double> rho;
};
Report cmd_sweep(const SweepOptions& opt);

}  // namespace fbcrs::cli
