#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fbcrs/cli/commands.h"
#include "fbcrs/cli/report.h"
#include "fbcrs/error.h"

namespace {

using namespace fbcrs::cli;

constexpr int kExitFailure = 1;
constexpr int kExitViolation = 2;
constexpr int kExitInfeasible = 3;

struct Output {
  std::string format;
  std::string path;
};

void add_output(CLI::App* sub, Output& out, const char* default_format) {
  out.format = default_format;
  sub->add_option("--format", out.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  sub->add_option("-o,--output", out.path, "Write the report here instead of stdout");
}

int emit(const Report& report, const Output& out) {
  const Format format = parse_format(out.format);
  if (out.path.empty()) {
    render(report, format, std::cout);
  } else {
    std::ofstream file(out.path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + out.path + "'");
    render(report, format, file);
  }
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return report.exit_code;
}

struct Sampling {
  std::uint64_t trials = 100'000;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  CLI::Option* trials_opt = nullptr;
};

void add_sampling(CLI::App* sub, Sampling& s) {
  s.trials_opt = sub->add_option("--trials", s.trials, "Monte Carlo trials")
                     ->check(CLI::PositiveNumber)
                     ->capture_default_str();
  sub->add_option("--seed", s.seed, "Base seed (falls back to FBCRS_SEED, then 0)");
  sub->add_option("--workers", s.workers, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void reject_trials_in_exact(const Sampling& s, const std::string& mode) {
  if (mode == "exact" && s.trials_opt->count() > 0) {
    throw fbcrs::InputError("--trials only applies in mc mode");
  }
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const fbcrs::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const fbcrs::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const fbcrs::InputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forward-backward contention resolution schemes and fair rationing"};
  app.require_subcommand(1);
  std::function<int()> action;

  Output constants_out;
  auto* constants = app.add_subcommand("constants", "Headline guarantee constants");
  add_output(constants, constants_out, "csv");
  constants->callback([&] { action = [&] { return emit(cmd_constants(), constants_out); }; });

  LpSolveOptions lp;
  Output lp_out;
  auto* lp_cmd = app.add_subcommand("lp-solve", "Solve the instance-optimal LP");
  lp_cmd->add_option("--instance", lp.instance, "Single-unit instance JSON")->required();
  lp_cmd->add_flag("--dual", lp.dual, "Report the dual objective and its feasibility");
  add_output(lp_cmd, lp_out, "json");
  lp_cmd->callback([&] { action = [&] { return emit(cmd_lp_solve(lp), lp_out); }; });

  SimulateSingleUnitOptions su;
  Sampling su_s;
  Output su_out;
  auto* su_cmd = app.add_subcommand("simulate-single-unit", "Monte Carlo check of a single-unit plan");
  su_cmd->add_option("--instance", su.instance, "Single-unit instance JSON")->required();
  su_cmd->add_option("--plan", su.plan, "lp, closed or a plan JSON path")->capture_default_str();
  add_sampling(su_cmd, su_s);
  add_output(su_cmd, su_out, "csv");
  su_cmd->callback([&] {
    action = [&] {
      su.trials = su_s.trials;
      su.seed = resolve_seed(su_s.seed);
      su.workers = su_s.workers;
      return emit(cmd_simulate_single_unit(su), su_out);
    };
  });

  SimulateKnapsackOptions ks;
  Sampling ks_s;
  Output ks_out;
  auto* ks_cmd = app.add_subcommand("simulate-knapsack", "Exact or Monte Carlo knapsack run");
  ks_cmd->add_option("--instance", ks.instance, "Knapsack instance JSON")->required();
  ks_cmd->add_option("--plan", ks.plan, "closed or a plan JSON path")->capture_default_str();
  ks_cmd->add_option("--mode", ks.mode, "exact or mc")
      ->check(CLI::IsMember({"exact", "mc"}))
      ->capture_default_str();
  ks_cmd->add_option("--replicas", ks.replicas, "Replica pool for the mc acceptance schedule")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ks_cmd->add_flag("--monitor", ks.monitor, "Check fill-law invariants after every step");
  add_sampling(ks_cmd, ks_s);
  add_output(ks_cmd, ks_out, "csv");
  ks_cmd->callback([&] {
    action = [&] {
      reject_trials_in_exact(ks_s, ks.mode);
      ks.trials = ks_s.trials;
      ks.seed = resolve_seed(ks_s.seed);
      ks.workers = ks_s.workers;
      return emit(cmd_simulate_knapsack(ks), ks_out);
    };
  });

  RationOptions ra;
  Sampling ra_s;
  Output ra_out;
  auto* ra_cmd = app.add_subcommand("ration", "Fair rationing through a CRS");
  ra_cmd->add_option("--instance", ra.instance, "Rationing instance JSON")->required();
  ra_cmd->add_option("--beta", ra.beta, "auto or a JSON file of per-agent targets")
      ->capture_default_str();
  ra_cmd->add_option("--plan", ra.plan, "auto, lp or closed")
      ->check(CLI::IsMember({"auto", "lp", "closed"}))
      ->capture_default_str();
  ra_cmd->add_option("--mode", ra.mode, "exact or mc")
      ->check(CLI::IsMember({"exact", "mc"}))
      ->capture_default_str();
  add_sampling(ra_cmd, ra_s);
  add_output(ra_cmd, ra_out, "csv");
  ra_cmd->callback([&] {
    action = [&] {
      reject_trials_in_exact(ra_s, ra.mode);
      ra.trials = ra_s.trials;
      ra.seed = resolve_seed(ra_s.seed);
      ra.workers = ra_s.workers;
      return emit(cmd_ration(ra), ra_out);
    };
  });

  DualCertificateOptions dc;
  Output dc_out;
  auto* dc_cmd = app.add_subcommand("dual-certificate", "Uniform-instance dual certificate");
  dc_cmd->add_option("--n", dc.n, "Odd number of elements")->capture_default_str();
  dc_cmd->add_option("--rho", dc.rho, "Total mass")->capture_default_str();
  add_output(dc_cmd, dc_out, "json");
  dc_cmd->callback([&] { action = [&] { return emit(cmd_dual_certificate(dc), dc_out); }; });

  SweepOptions sw;
  Output sw_out;
  auto* sw_cmd = app.add_subcommand("sweep", "Sweep over a grid of (n, rho)");
  sw_cmd->add_option("--kind", sw.kind, "lpopt, dual-gap or knapsack-min")
      ->check(CLI::IsMember({"lpopt", "dual-gap", "knapsack-min"}))
      ->capture_default_str();
  sw_cmd->add_option("--n", sw.n, "Instance sizes")->required()->delimiter(',');
  sw_cmd->add_option("--rho", sw.rho, "Total masses")->required()->delimiter(',');
  add_output(sw_cmd, sw_out, "csv");
  sw_cmd->callback([&] { action = [&] { return emit(cmd_sweep(sw), sw_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInfeasible;
  }
  return run_guarded(action);
}
