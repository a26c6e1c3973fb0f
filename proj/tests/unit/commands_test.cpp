#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "rlrv/trace_io.hpp"

using namespace rlrv;
using namespace rlrv::cli;
namespace fs = std::filesystem;

namespace {

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rlrv_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const RunConfig cfg = parse_config(R"({"discount":0.9,"scenario":"NewEnvironment","negligibility":0.1,
    "schedule":"geometric","seed":5,"environment_seed":3})");
  EXPECT_EQ(cfg.discount, 0.9);
  EXPECT_EQ(cfg.patrol.discount, 0.9);
  EXPECT_EQ(cfg.scenario, Scenario::NewEnvironment);
  EXPECT_EQ(cfg.schedule, Schedule::Geometric);
  EXPECT_EQ(cfg.patrol.rng_seed, 3u);
  EXPECT_EQ(cfg.learning_rate, 0.75);
  EXPECT_EQ(cfg.check_every, 500);
  EXPECT_EQ(cfg.n_states(), 18);
}

TEST(Config, RangeValidation) {
  EXPECT_THROW(parse_config(R"({"n_transitions":0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"discount":1.0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"learning_rate":0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"resamples":50})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"calibration_fraction":1.0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario":"Other"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"policy":"best"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"environment":"random","policy":"schedule"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"discount":"high"})"), ConfigError);
  EXPECT_THROW(parse_config("[1,2]"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
}

TEST(ExitCodes, TotalOverStatus) {
  EXPECT_EQ(exit_code_for(Status::Satisfied), 0);
  EXPECT_EQ(exit_code_for(Status::Violated), 2);
  EXPECT_EQ(exit_code_for(Status::Unverified), 3);
}

TEST_F(CommandsTest, SimulateWritesTraceAndSidecar) {
  RunConfig cfg;
  cfg.n_transitions = 250;
  const fs::path out = dir_ / "t.jsonl";
  ASSERT_EQ(run_simulate(cfg, out), 0);
  const Trace t = read_trace_file(out);
  EXPECT_EQ(t.size(), 250u);
  EXPECT_TRUE(fs::exists(truth_path(out)));
  const std::string first = slurp(out);
  ASSERT_EQ(run_simulate(cfg, out), 0);
  EXPECT_EQ(slurp(out), first);
}

TEST_F(CommandsTest, MonitorEmptyTraceIsUnverified) {
  const fs::path trace = write("empty.jsonl", "{\"n_states\":18,\"n_actions\":3,\"format_version\":\"1\"}\n");
  std::ostringstream out;
  EXPECT_EQ(run_monitor(RunConfig{}, trace, Property::Quality, out), kUnverified);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_NE(text.find("Unverified"), std::string::npos);
}

TEST_F(CommandsTest, MonitorMalformedTraceExitsOne) {
  const fs::path trace = write("bad.jsonl", "{\"n_states\":18,\"n_actions\":3,\"format_version\":\"1\"}\n{oops\n");
  std::ostringstream out;
  EXPECT_EQ(run_monitor(RunConfig{}, trace, Property::Quality, out), kBadInput);
}

TEST_F(CommandsTest, MonitorShapeMismatchExitsOne) {
  const fs::path trace = write("small.jsonl", "{\"n_states\":2,\"n_actions\":1,\"format_version\":\"1\"}\n");
  std::ostringstream out;
  EXPECT_EQ(run_monitor(RunConfig{}, trace, Property::Quality, out), kBadInput);
}

TEST_F(CommandsTest, TimelinessNewEnvironmentWithoutOmega) {
  RunConfig cfg;
  cfg.n_transitions = 1000;
  cfg.scenario = Scenario::NewEnvironment;
  const fs::path trace = dir_ / "t.jsonl";
  ASSERT_EQ(run_simulate(cfg, trace), 0);
  std::ostringstream out;
  EXPECT_EQ(run_monitor(cfg, trace, Property::Timeliness, out), kUnverified);
  cfg.negligibility = 0.1;
  cfg.max_transitions = 200;
  std::ostringstream again;
  EXPECT_EQ(run_monitor(cfg, trace, Property::Timeliness, again), kSatisfied);
  EXPECT_NE(again.str().find("m_t_worst=110"), std::string::npos);
}

TEST_F(CommandsTest, QualityOnLongTraceIsSatisfied) {
  RunConfig cfg;
  cfg.n_transitions = 60000;
  cfg.check_every = 30000;
  const fs::path trace = dir_ / "t.jsonl";
  ASSERT_EQ(run_simulate(cfg, trace), 0);
  std::ostringstream out;
  EXPECT_EQ(run_monitor(cfg, trace, Property::Quality, out), kSatisfied) << out.str();
}

TEST_F(CommandsTest, ReportWritesFigureData) {
  RunConfig cfg;
  cfg.n_transitions = 6000;
  cfg.check_every = 2000;
  cfg.td_transitions = 50;
  const fs::path trace = dir_ / "t.jsonl";
  ASSERT_EQ(run_simulate(cfg, trace), 0);
  const fs::path out = dir_ / "report";
  ASSERT_EQ(run_report(cfg, trace, out), 0);
  const char* headers[][2] = {
      {"fig1_bias_sigma.csv", "step,max_bias_rel,max_sigma_rel,status"},
      {"fig2_relative_error.csv", "step,state,v_true,v_hat,relative_error"},
      {"fig3_eta_bounds.csv", "step,state,eta_lower,eta_upper,condition,status"},
      {"fig4_delta_norm.csv", "step,initial_state,delta_norm,epsilon,m_t"},
  };
  for (const auto& [name, header] : headers) {
    const std::string text = slurp(out / name);
    EXPECT_EQ(text.substr(0, text.find('\n')), header) << name;
    EXPECT_GE(std::count(text.begin(), text.end(), '\n'), 3) << name;
  }
}

TEST_F(CommandsTest, ReportRelativeErrorMatchesIndependentRecomputation) {
  RunConfig cfg;
  cfg.n_transitions = 4000;
  cfg.check_every = 4000;
  cfg.td_transitions = 5;
  const fs::path trace_file = dir_ / "t.jsonl";
  ASSERT_EQ(run_simulate(cfg, trace_file), 0);
  ASSERT_EQ(run_report(cfg, trace_file, dir_ / "r"), 0);

  // Recompute V and V-hat from the raw files.
  const Mdp truth = read_truth_file(truth_path(trace_file));
  const Trace trace = read_trace_file(trace_file);
  const PolicyTable pi = monitored_policy(cfg);
  const ValueVector v = value_of_policy(truth, pi);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(18 * 3, 18);
  Eigen::MatrixXd reward_sum = Eigen::MatrixXd::Zero(18 * 3, 18);
  for (const auto& r : trace.records) {
    counts(r.state * 3 + r.action, r.next_state) += 1.0;
    reward_sum(r.state * 3 + r.action, r.next_state) += r.reward;
  }
  Eigen::MatrixXd tp = Eigen::MatrixXd::Zero(18, 18);
  Eigen::VectorXd rp = Eigen::VectorXd::Zero(18);
  for (int s = 0; s < 18; ++s) {
    for (int a = 0; a < 3; ++a) {
      const double n = counts.row(s * 3 + a).sum();
      for (int t = 0; t < 18; ++t) {
        const double c = counts(s * 3 + a, t);
        if (c == 0.0) continue;
        tp(s, t) += pi(s, a) * c / n;
        rp[s] += pi(s, a) * reward_sum(s * 3 + a, t) / n;
      }
    }
  }
  const Eigen::VectorXd v_hat =
      (Eigen::MatrixXd::Identity(18, 18) - 0.5 * tp).colPivHouseholderQr().solve(rp);

  std::ifstream in(dir_ / "r" / "fig2_relative_error.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 5u);
    const int s = std::stoi(cells[1]);
    const double expected = std::abs(v[s] - v_hat[s]) / std::abs(v_hat[s]);
    EXPECT_NEAR(std::stod(cells[4]), expected, 1e-9) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 18);
}
