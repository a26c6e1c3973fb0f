#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlrv/harness.hpp"
#include "rlrv/trace_io.hpp"

using namespace rlrv;

namespace {

std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_trace(in);
  } catch (const TraceFormatError& e) {
    return e.line();
  }
  return 0;
}

const char* kHeader = "{\"n_states\":2,\"n_actions\":1,\"format_version\":\"1\"}\n";

}  // namespace

TEST(TraceIo, RoundTrip) {
  Trace t = run_policy(build_patrol_mdp(PatrolConfig{}), PolicyTable::uniform(18, 3), 300, 1);
  t.records[3].episode_id = 7;
  std::stringstream buf;
  write_trace(buf, t);
  EXPECT_EQ(read_trace(buf), t);
}

TEST(TraceIo, KeyOrderAndHeader) {
  Trace t{2, 1, {{0, 1, 0, 0.5, 0, std::nullopt}, {3, 0, 0, 2.0, 1, 4}}};
  std::ostringstream out;
  write_trace(out, t);
  EXPECT_EQ(out.str(), std::string(kHeader) +
                           "{\"step\":0,\"s\":1,\"a\":0,\"r\":0.5,\"sp\":0}\n"
                           "{\"step\":3,\"s\":0,\"a\":0,\"r\":2.0,\"sp\":1,\"ep\":4}\n");
}

TEST(TraceIo, EmptyBodyIsValid) {
  std::istringstream in(kHeader);
  const Trace t = read_trace(in);
  EXPECT_EQ(t.n_states, 2);
  EXPECT_EQ(t.size(), 0u);
}

TEST(TraceIo, ErrorsCarryLineNumbers) {
  const std::string h = kHeader;
  EXPECT_EQ(error_line(""), 1u);
  EXPECT_EQ(error_line("{\"n_states\":2,\"n_actions\":1}\n"), 1u);
  EXPECT_EQ(error_line(h + "{\"step\":0,\"s\":0,\"a\":0,\"r\":1,\"sp\":2}\n"), 2u);
  EXPECT_EQ(error_line(h + "{\"step\":0,\"s\":0,\"a\":1,\"r\":1,\"sp\":0}\n"), 2u);
  EXPECT_EQ(error_line(h + "{\"step\":0,\"s\":0,\"a\":0,\"r\":1,\"sp\":0}\n"
                           "{\"step\":0,\"s\":0,\"a\":0,\"r\":1,\"sp\":0}\n"),
            3u);
  EXPECT_EQ(error_line(h + "{\"step\":0,\"s\":0,\"a\":0,\"r\":1}\n"), 2u);
  EXPECT_EQ(error_line(h + "not json\n"), 2u);
  EXPECT_EQ(error_line(h + "{\"step\":0,\"s\":0.5,\"a\":0,\"r\":1,\"sp\":0}\n"), 2u);
  EXPECT_EQ(error_line(h + "{\"step\":0,\"s\":0,\"a\":0,\"r\":\"x\",\"sp\":0}\n"), 2u);
}

TEST(TraceIo, TruthSidecarRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "rlrv_trace_io_test";
  std::filesystem::create_directories(dir);
  const Mdp mdp = build_patrol_mdp(PatrolConfig{});
  const auto trace_file = dir / "t.jsonl";
  EXPECT_EQ(truth_path(trace_file).filename(), "t.jsonl.truth.json");
  write_truth_file(truth_path(trace_file), mdp);
  const Mdp back = read_truth_file(truth_path(trace_file));
  EXPECT_EQ(back.transition_data(), mdp.transition_data());
  EXPECT_EQ(back.reward_data(), mdp.reward_data());
  EXPECT_EQ(back.discount(), mdp.discount());
  std::filesystem::remove_all(dir);
}
