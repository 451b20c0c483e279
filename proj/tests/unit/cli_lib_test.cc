#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>

#include <gtest/gtest.h>

#include "fbcrs/cli/commands.h"
#include "fbcrs/cli/json_io.h"
#include "fbcrs/cli/report.h"
#include "fbcrs/error.h"
#include "fbcrs/lp_si.h"

namespace fbcrs::cli {
namespace {

using nlohmann::json;

std::string data_file(const std::string& name) {
  const char* dir = std::getenv("FBCRS_DATA_DIR");
  return std::string(dir ? dir : "data") + "/" + name;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) {
    if (t.columns[k] == name) return k;
  }
  ADD_FAILURE() << "no column " << name;
  return 0;
}

double num(const Cell& c) { return std::get<double>(c); }

TEST(CsvField, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_field("cr\r"), "\"cr\r\"");
  EXPECT_EQ(csv_field(""), "");
}

TEST(FormatDouble, RoundTripsAndBlanksNonFinite) {
  for (double v : {0.1, 1.0 / 3.0, 0.6224593312018546, 1e-300, -2.5}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "");
}

TEST(WriteCsv, UsesCrLfAndQuotes) {
  Table t;
  t.columns = {"name", "value", "flag", "empty"};
  t.add({std::string("a,b"), 0.25, true, {}});
  t.add({std::string("c"), std::int64_t{3}, false, std::numeric_limits<double>::quiet_NaN()});
  std::ostringstream out;
  write_csv(t, out);
  EXPECT_EQ(out.str(), "name,value,flag,empty\r\n\"a,b\",0.25,true,\r\nc,3,false,\r\n");
}

TEST(Table, RejectsRaggedRows) {
  Table t;
  t.columns = {"a", "b"};
  EXPECT_THROW(t.add({0.0}), std::logic_error);
}

TEST(Render, JsonHasSummaryAtTopLevel) {
  Report r;
  r.command = "demo";
  r.summary["lpopt"] = 0.75;
  r.table.columns = {"x", "y"};
  r.table.add({0.5, std::numeric_limits<double>::quiet_NaN()});
  r.warnings.push_back("careful");
  std::ostringstream out;
  render(r, Format::kJson, out);
  const json j = json::parse(out.str());
  EXPECT_EQ(j["command"], "demo");
  EXPECT_EQ(j["lpopt"], 0.75);
  ASSERT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["rows"][0]["x"], 0.5);
  EXPECT_TRUE(j["rows"][0]["y"].is_null());
  EXPECT_EQ(j["warnings"][0], "careful");
}

TEST(Render, FlagViolationSetsExitCode) {
  Report r;
  EXPECT_EQ(r.exit_code, 0);
  r.flag_violation("broken");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(ParseFormat, KnownAndUnknown) {
  EXPECT_EQ(parse_format("csv"), Format::kCsv);
  EXPECT_EQ(parse_format("json"), Format::kJson);
  EXPECT_THROW(parse_format("xml"), InputError);
}

TEST(JsonIo, SingleUnitRoundTrip) {
  const json j = {{"kind", "single_unit"}, {"n", 2}, {"x", {0.25, 0.5}}};
  const Instance inst = instance_from_json(j);
  ASSERT_TRUE(std::holds_alternative<SingleUnitInstance>(inst));
  EXPECT_EQ(std::get<SingleUnitInstance>(inst).x(1), 0.5);
  EXPECT_EQ(instance_from_json(instance_to_json(inst)).index(), inst.index());
  EXPECT_STREQ(kind_name(inst), "single_unit");
}

TEST(JsonIo, KnapsackRoundTrip) {
  const json j = {{"kind", "knapsack"},
                  {"laws", {{{"atoms", {{0.2, 0.3}, {0.6, 0.1}}}, {"inactive", 0.6}}}}};
  const Instance inst = instance_from_json(j);
  const auto& k = std::get<KnapsackInstance>(inst);
  EXPECT_NEAR(k.mu(0), 0.2 * 0.3 + 0.6 * 0.1, 1e-15);
  const Instance again = instance_from_json(instance_to_json(inst));
  const auto& back = std::get<KnapsackInstance>(again);
  EXPECT_EQ(back.law(0), k.law(0));
}

TEST(JsonIo, RationingRoundTrip) {
  const json j = {{"kind", "rationing"},
                  {"demands", {{{"atoms", {{0.5, 0.5}, {2.0, 0.5}}}}, {{"atoms", {{1.0, 1.0}}}}}},
                  {"service", {"II", "III"}}};
  const Instance inst = instance_from_json(j);
  const auto& r = std::get<RationingInstance>(inst);
  EXPECT_EQ(r.service(1), ServiceType::kTypeIII);
  const Instance again = instance_from_json(instance_to_json(inst));
  const auto& back = std::get<RationingInstance>(again);
  EXPECT_EQ(back.demand(0), r.demand(0));
  EXPECT_EQ(back.service(0), r.service(0));
}

TEST(JsonIo, RejectsBadInput) {
  EXPECT_THROW(instance_from_json(json{{"kind", "matroid"}}), InputError);
  EXPECT_THROW(instance_from_json(json{{"x", {0.5}}}), InputError);
  EXPECT_THROW(instance_from_json(json{{"kind", "single_unit"}, {"n", 3}, {"x", {0.5}}}),
               InputError);
  EXPECT_THROW(instance_from_json(json{{"kind", "single_unit"}, {"x", {1.5}}}), InputError);
  EXPECT_THROW(instance_from_json(json{{"kind", "single_unit"}, {"x", "abc"}}), InputError);
  EXPECT_THROW(
      instance_from_json(json{{"kind", "knapsack"},
                              {"laws", {{{"atoms", {{0.2, 0.5}}}, {"inactive", 0.2}}}}}),
      InputError);
  EXPECT_THROW(instance_from_json(json{{"kind", "rationing"},
                                       {"demands", {{{"atoms", {{1.0, 1.0}}}}}},
                                       {"service", {"IV"}}}),
               InputError);
}

TEST(JsonIo, PlanAndBeta) {
  const SelectionPlan plan = plan_from_json(json{{"c_f", {1.0, 0.5}}, {"c_b", {0.5, 1.0}}});
  EXPECT_EQ(plan.c_backward[1], 1.0);
  EXPECT_EQ(plan_to_json(plan)["c_f"][1], 0.5);
  EXPECT_THROW(plan_from_json(json{{"c_f", {1.0}}, {"c_b", {0.5, 1.0}}}), InputError);
  EXPECT_EQ(beta_from_json(json::array({0.1, 0.2})).size(), 2u);
  EXPECT_EQ(beta_from_json(json{{"beta", {0.3}}})[0], 0.3);
  EXPECT_THROW(beta_from_json(json{{"b", {0.3}}}), InputError);
}

TEST(JsonIo, ReadInstanceFromDisk) {
  const Instance inst = read_instance(data_file("single_unit_two_halves.json"));
  EXPECT_EQ(std::get<SingleUnitInstance>(inst).size(), 2u);
  EXPECT_ANY_THROW(read_instance(data_file("does_not_exist.json")));
}

TEST(ResolveSeed, FlagThenEnvironmentThenZero) {
  ::unsetenv("FBCRS_SEED");
  EXPECT_EQ(resolve_seed(std::nullopt), 0u);
  ::setenv("FBCRS_SEED", "1234", 1);
  EXPECT_EQ(resolve_seed(std::nullopt), 1234u);
  EXPECT_EQ(resolve_seed(7), 7u);
  ::setenv("FBCRS_SEED", "12x", 1);
  EXPECT_THROW(resolve_seed(std::nullopt), InputError);
  EXPECT_EQ(resolve_seed(9), 9u);
  ::unsetenv("FBCRS_SEED");
}

TEST(Commands, Constants) {
  const Report r = cmd_constants();
  const std::size_t name = column(r.table, "name");
  const std::size_t value = column(r.table, "value");
  bool found = false;
  for (const auto& row : r.table.rows) {
    if (std::get<std::string>(row[name]) == "fb-crs") {
      EXPECT_NEAR(num(row[value]), 0.622459331202, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Commands, LpSolveTwoHalves) {
  LpSolveOptions opt;
  opt.instance = data_file("single_unit_two_halves.json");
  opt.dual = true;
  const Report r = cmd_lp_solve(opt);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NEAR(r.summary["lpopt"].get<double>(), 0.75, 1e-9);
  EXPECT_NEAR(r.summary["dual_objective"].get<double>(), 0.75, 1e-9);
  EXPECT_EQ(r.table.rows.size(), 2u);
}

TEST(Commands, LpSolveRejectsOtherKinds) {
  LpSolveOptions opt;
  opt.instance = data_file("knapsack_two_atoms.json");
  EXPECT_THROW(cmd_lp_solve(opt), InputError);
}

TEST(Commands, SimulateSingleUnitIsSeeded) {
  SimulateSingleUnitOptions opt;
  opt.instance = data_file("single_unit_mixed.json");
  opt.trials = 20'000;
  opt.seed = 5;
  const Report a = cmd_simulate_single_unit(opt);
  opt.workers = 3;
  const Report b = cmd_simulate_single_unit(opt);
  const std::size_t rate = column(a.table, "empirical_rate");
  for (std::size_t i = 0; i < a.table.rows.size(); ++i) {
    EXPECT_EQ(num(a.table.rows[i][rate]), num(b.table.rows[i][rate]));
  }
  EXPECT_EQ(a.summary["inactive_acceptances"], 0);
}

TEST(Commands, SimulateKnapsackExactMatchesPlan) {
  SimulateKnapsackOptions opt;
  opt.instance = data_file("knapsack_uniform_50.json");
  opt.monitor = true;
  const Report r = cmd_simulate_knapsack(opt);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_LE(r.summary["max_deviation"].get<double>(), 1e-10);
  EXPECT_EQ(r.summary["monitor_violations"], 0);
  EXPECT_NEAR(r.summary["objective"].get<double>(), 1.0 / 3.0, 1e-10);
}

TEST(Commands, SimulateKnapsackRejectsLpPlan) {
  SimulateKnapsackOptions opt;
  opt.instance = data_file("knapsack_two_atoms.json");
  opt.plan = "lp";
  EXPECT_THROW(cmd_simulate_knapsack(opt), InputError);
}

TEST(Commands, RationTwoUnitAgents) {
  RationOptions opt;
  opt.instance = data_file("rationing_two_unit_agents.json");
  opt.beta = data_file("beta_two_agents.json");
  const Report r = cmd_ration(opt);
  EXPECT_EQ(r.exit_code, 0);
  const std::size_t service = column(r.table, "expected_service");
  for (const auto& row : r.table.rows) EXPECT_NEAR(num(row[service]), 0.375, 1e-9);
}

TEST(Commands, RationWithTypeOneUsesTheKnapsackPath) {
  RationOptions opt;
  opt.instance = data_file("rationing_with_type_one.json");
  const Report r = cmd_ration(opt);
  EXPECT_EQ(r.summary["path"], "knapsack");
  const std::size_t slack = column(r.table, "slack");
  for (const auto& row : r.table.rows) EXPECT_GE(num(row[slack]), -1e-9);
}

TEST(Commands, RationInfeasibleBetaThrows) {
  RationOptions opt;
  opt.instance = data_file("rationing_two_unit_agents.json");
  const std::string path = ::testing::TempDir() + "/beta_too_big.json";
  {
    std::ofstream out(path);
    out << "[0.6, 0.6]";
  }
  opt.beta = path;
  EXPECT_THROW(cmd_ration(opt), InfeasibleError);
}

TEST(Commands, DualCertificate) {
  DualCertificateOptions opt;
  opt.n = 3;
  const Report r = cmd_dual_certificate(opt);
  EXPECT_NEAR(r.summary["objective"].get<double>(), 1.12585, 1e-5);
  EXPECT_TRUE(r.summary["feasible"].get<bool>());
  opt.n = 4;
  EXPECT_THROW(cmd_dual_certificate(opt), InputError);
}

TEST(Commands, SweepLpopt) {
  SweepOptions opt;
  opt.kind = "lpopt";
  opt.n = {1, 5};
  opt.rho = {0.0, 1.0};
  const Report r = cmd_sweep(opt);
  ASSERT_EQ(r.table.rows.size(), 4u);
  const std::size_t primal = column(r.table, "primal");
  const std::size_t bound = column(r.table, "bound");
  for (const auto& row : r.table.rows) {
    EXPECT_GE(num(row[primal]), num(row[bound]) - 1e-9);
  }
  opt.kind = "nonsense";
  EXPECT_THROW(cmd_sweep(opt), InputError);
}

}  // namespace
}  // namespace fbcrs::cli
