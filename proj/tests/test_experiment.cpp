#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "rdgoodput/experiment.hpp"

using namespace rdgoodput;
using nlohmann::json;

namespace {

json base_spec() {
  return json::parse(R"({
    "name": "t",
    "engine": "analytic",
    "grid": {"ac": ["BE"], "mode": ["rd"], "n": [1, "n_max"], "k_d": [8, 64], "ber": [0], "d": [1]}
  })");
}

std::vector<std::string> violations(const json& j) {
  std::vector<std::string> errs;
  const auto s = parse_spec(j, errs);
  if (!errs.empty()) return errs;
  return validate(s);
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

std::string run(const json& j, unsigned workers = 1) {
  std::vector<std::string> errs;
  const auto s = parse_spec(j, errs);
  EXPECT_TRUE(errs.empty());
  std::ostringstream os;
  run_experiment(s, os, workers);
  return os.str();
}

}  // namespace

TEST(Experiment, ValidSpecHasNoViolations) { EXPECT_TRUE(violations(base_spec()).empty()); }

TEST(Experiment, ReceiverCapViolation) {
  auto j = base_spec();
  j["grid"]["n"] = {26};
  j["grid"]["k_d"] = {64};
  const auto v = violations(j);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(mentions(v, "n=26, k_d=64, d=1"));
  j["grid"]["d"] = {2};
  EXPECT_TRUE(violations(j).empty());
}

TEST(Experiment, EngineCompatibility) {
  auto j = base_spec();
  j["engine"] = "markov";
  j["grid"]["mode"] = {"nord"};
  EXPECT_TRUE(violations(j).empty());
  j["grid"]["ber"] = {1e-5};
  EXPECT_TRUE(mentions(violations(j), "grid.ber"));
  j["grid"]["ber"] = {0};
  j["grid"]["mode"] = {"rd"};
  EXPECT_TRUE(mentions(violations(j), "grid.mode"));
  j = base_spec();
  j["grid"]["repetition"] = {"first3_twice"};
  EXPECT_TRUE(mentions(violations(j), "grid.repetition"));
  j["engine"] = "simulate";
  EXPECT_TRUE(violations(j).empty());
}

TEST(Experiment, EmptyGridAndBadFields) {
  auto j = base_spec();
  j["grid"]["k_d"] = json::array();
  EXPECT_TRUE(mentions(violations(j), "grid.k_d: empty"));
  j = base_spec();
  j["grid"]["ac"] = {"XX"};
  EXPECT_TRUE(mentions(violations(j), "grid.ac[0]"));
  j = base_spec();
  j["grid"]["k_d"] = {65};
  EXPECT_TRUE(mentions(violations(j), "grid.k_d[0]"));
  j = base_spec();
  j["engine"] = "quantum";
  EXPECT_TRUE(mentions(violations(j), "engine"));
  j = base_spec();
  j["colour"] = 1;
  EXPECT_TRUE(mentions(violations(j), "colour: unknown key"));
  j = base_spec();
  j["non_standard"] = {{"ac", {{"BE", {{"ap", {{"cw_min", 0}}}}}}}};
  EXPECT_TRUE(mentions(violations(j), "cw_min"));
}

TEST(Experiment, RangeSyntax) {
  auto j = base_spec();
  j["grid"]["k_d"] = {{"from", 1}, {"to", 64}, {"step", 9}};
  std::vector<std::string> errs;
  const auto s = parse_spec(j, errs);
  EXPECT_TRUE(errs.empty());
  EXPECT_EQ(s.grid.k_d, (std::vector<std::int64_t>{1, 10, 19, 28, 37, 46, 55, 64}));
}

TEST(Experiment, GridExpansionResolvesNMax) {
  std::vector<std::string> errs;
  auto j = base_spec();
  j["grid"]["mode"] = {"rd", "nord"};
  const auto s = parse_spec(j, errs);
  const auto pts = expand_grid(s);
  ASSERT_EQ(pts.size(), 2u * 2u + 2u);  // nord collapses n
  EXPECT_EQ(pts[0].n, 1);
  EXPECT_EQ(pts[3].n, 25);
  EXPECT_EQ(pts[2].n, n_max(8));
  EXPECT_EQ(pts[4].mode, OperationMode::NoRD);
}

TEST(Experiment, CsvIsVersionedAndDeterministic) {
  auto j = base_spec();
  j["reduce"] = {{"max_over", "k_d"}};
  const auto a = run(j);
  const auto b = run(j, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("# schema: rdgoodput-sweep/1\n", 0), 0u);
  EXPECT_NE(a.find("\nmax,analytic,BE,rd,n_max,25,64,"), std::string::npos) << a;
  EXPECT_NE(a.find("run,analytic,BE,rd,1,1,64,1,0,off,,1119.88,"), std::string::npos) << a;
}

TEST(Experiment, SimulatedRowsPerSeed) {
  auto j = base_spec();
  j["engine"] = "simulate";
  j["grid"]["n"] = {2};
  j["grid"]["k_d"] = {16};
  j["grid"]["ber"] = {1e-5};
  j["seeds"] = {1, 2, 3};
  j["sim"] = {{"cycles", 200}};
  const auto a = run(j, 3);
  EXPECT_EQ(a, run(j, 1));
  std::istringstream in(a);
  std::string line;
  int runs = 0, means = 0;
  while (std::getline(in, line)) {
    runs += line.rfind("run,", 0) == 0;
    means += line.rfind("mean,", 0) == 0;
  }
  EXPECT_EQ(runs, 3);
  EXPECT_EQ(means, 1);
}

TEST(Experiment, MarkovEngine) {
  auto j = base_spec();
  j["engine"] = "markov";
  j["grid"]["mode"] = {"nord"};
  j["grid"]["k_d"] = {64};
  const auto a = run(j);
  EXPECT_NE(a.find(",1075.84,"), std::string::npos) << a;
}

TEST(Experiment, NonStandardOverrides) {
  auto j = base_spec();
  j["grid"]["n"] = {1};
  j["grid"]["k_d"] = {64};
  std::vector<std::string> errs;
  auto plain = parse_spec(j, errs);
  j["non_standard"] = {{"ac", {{"BE", {{"ap", {{"aifsn", 7}}}}}}}};
  auto slow = parse_spec(j, errs);
  ASSERT_TRUE(errs.empty());
  EXPECT_EQ(slow.ac_params(AccessCategory::BE).ap.aifs - plain.ac_params(AccessCategory::BE).ap.aifs, Duration::micros(36));
  j["non_standard"] = {{"phy", {{"slot_us", 20}}}};
  auto phy = parse_spec(j, errs);
  ASSERT_TRUE(errs.empty());
  EXPECT_EQ(phy.phy.slot_time, Duration::micros(20));
  EXPECT_EQ(phy.ac_params(AccessCategory::BE).ap.aifs, Duration::micros(16 + 3 * 20));
}

TEST(Experiment, RunRejectsInvalidSpec) {
  ExperimentSpec s;
  s.name = "x";
  std::ostringstream os;
  EXPECT_THROW(run_experiment(s, os), SpecError);
}

TEST(Experiment, FloatFormatting) {
  EXPECT_EQ(format_g6(1119.8812), "1119.88");
  EXPECT_EQ(format_g6(1e-5), "1e-05");
  EXPECT_EQ(format_g6(0.0), "0");
}
