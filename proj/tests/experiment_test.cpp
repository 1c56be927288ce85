#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace uavrelay;
namespace fs = std::filesystem;

namespace {

experiment::ExperimentSpec small_spec() {
  experiment::ExperimentSpec e;
  e.schemes = {"lr", "es2d", "center"};
  e.values = {1, 3};
  e.trials = 2;
  e.seed = 11;
  e.es_spacing = 25.0;
  return e;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("uavrelay_" + name);
  fs::remove_all(d);
  return d;
}

experiment::RunOptions quiet(const fs::path& dir) {
  experiment::RunOptions o;
  o.out_dir = dir;
  o.quiet = true;
  return o;
}

}  // namespace

TEST(SweepVariable, ParseRoundTrip) {
  for (auto v : {experiment::SweepVariable::NumUsers, experiment::SweepVariable::BsPower,
                 experiment::SweepVariable::UavPower, experiment::SweepVariable::Density})
    EXPECT_EQ(experiment::parse_sweep_variable(experiment::to_string(v)), v);
  EXPECT_THROW(experiment::parse_sweep_variable("altitude"), ConfigError);
}

TEST(Spec, ParsesAndValidates) {
  const auto j = scenario::json::parse(R"({
    "schemes": ["lr", "center"],
    "sweep": {"variable": "bs_power_dbm", "values": [10, 20]},
    "trials": 3, "seed": 5
  })");
  const auto e = experiment::spec_from_json(j);
  EXPECT_EQ(e.sweep, experiment::SweepVariable::BsPower);
  EXPECT_EQ(e.values, (std::vector<double>{10, 20}));
  EXPECT_EQ(e.trials, 3);
  EXPECT_EQ(experiment::at_sweep_point(e, 20).bs_power_dbm, 20.0);
  EXPECT_THROW(experiment::spec_from_json(scenario::json::parse(R"({"schemes": ["magic"]})")), ConfigError);
  EXPECT_THROW(experiment::spec_from_json(scenario::json::parse(R"({"trials": 0})")), ConfigError);
}

TEST(Spec, ShippedConfigsLoad) {
  for (const auto& f : fs::directory_iterator(UAVRELAY_CONFIG_DIR)) {
    const auto name = f.path().filename().string();
    if (name.rfind("sweep_", 0) == 0 || name == "smoke.json") {
      EXPECT_NO_THROW(experiment::load_spec(f.path().string())) << name;
    }
  }
}

TEST(Trial, OneRowPerScheme) {
  const auto e = small_spec();
  const auto rows = experiment::run_trial(e, 1, 0);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.sweep_value, 3.0);
    EXPECT_EQ(r.seed, scenario::trial_seed(e.seed, 0));
    EXPECT_GT(r.capacity_mbps, 0.0);
  }
  const auto row = experiment::trial_row(e, rows[0]);
  const auto back = experiment::parse_trial_row(e, row);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(experiment::trial_row(e, *back), row);
}

TEST(Run, ByteIdenticalReruns) {
  const auto e = small_spec();
  const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  auto oa = quiet(a), ob = quiet(b);
  ob.parallel = 3;
  const auto ra = experiment::run(e, oa);
  experiment::run(e, ob);
  EXPECT_TRUE(ra.errors.empty());
  EXPECT_EQ(ra.reports.size(), 12u);
  EXPECT_EQ(slurp(a / "trials.csv"), slurp(b / "trials.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, ResumeFromPartialFile) {
  const auto e = small_spec();
  const auto full = fresh_dir("resume_full"), part = fresh_dir("resume_part");
  experiment::run(e, quiet(full));
  const auto reference = slurp(full / "trials.csv");

  // Keep the header, one complete trial and half of another.
  fs::create_directories(part);
  {
    std::istringstream in(reference);
    std::ofstream out(part / "trials.csv");
    std::string line;
    for (int n = 0; n < 6 && std::getline(in, line); ++n) out << line << '\n';
  }
  const auto res = experiment::run(e, quiet(part));
  EXPECT_EQ(res.resumed_trials, 1);
  EXPECT_EQ(slurp(part / "trials.csv"), reference);
  EXPECT_EQ(slurp(part / "summary.csv"), slurp(full / "summary.csv"));

  auto no = quiet(part);
  no.resume = false;
  EXPECT_EQ(experiment::run(e, no).resumed_trials, 0);
  fs::remove_all(full);
  fs::remove_all(part);
}

TEST(Summary, MeansPerSchemeAndSweepPoint) {
  const auto e = small_spec();
  std::vector<experiment::TrialReport> reports;
  for (int t = 0; t < 2; ++t) {
    experiment::TrialReport r;
    r.sweep_index = 0;
    r.sweep_value = 1;
    r.trial = t;
    r.scheme = "lr";
    r.capacity_mbps = t == 0 ? 10.0 : 20.0;
    r.converged = t == 0;
    reports.push_back(r);
  }
  const auto s = experiment::summarize(e, reports);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_EQ(s[0].scheme, "lr");
  EXPECT_EQ(s[0].trials, 2);
  EXPECT_DOUBLE_EQ(s[0].mean_capacity_mbps, 15.0);
  EXPECT_DOUBLE_EQ(s[0].convergence_rate, 0.5);
  EXPECT_EQ(s[1].trials, 0);
}

TEST(Trace, WritesIterationFiles) {
  const auto dir = fresh_dir("trace");
  const auto s = oracle::desk_scenario(2, 3);
  const auto sol = experiment::trace(s, dir);
  for (const char* f : {"trace.csv", "outer.csv", "path.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_GT(sol.rate, 0.0);
  fs::remove_all(dir);
}
