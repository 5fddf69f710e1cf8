#include "servingbench/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace servingbench::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("servingbench_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("SERVINGBENCH_SEED");
  }
  void TearDown() override {
    unsetenv("SERVINGBENCH_SEED");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static json load(const std::string& file) { return json::parse(std::ifstream(file)); }

  fs::path dir_;
};

std::size_t count_lines(const std::string& file) {
  std::ifstream in(file);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"sample", "--n", "ten"}).code, kExitUsage);
  EXPECT_EQ(run({"replay"}).code, kExitUsage);
}

TEST_F(CliTest, SamplePassesForExponential) {
  const auto r = run({"sample", "--dist", "exp", "--rate", "0.5", "--n", "10000", "--seed", "42", "--out", path("s")});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_NE(r.out.find("verdict"), std::string::npos);
  const auto doc = load(path("s/report.json"));
  EXPECT_EQ(doc["command"], "sample");
  EXPECT_EQ(doc["verdict"]["passed"], true);
  EXPECT_EQ(doc["gaps_digest"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, SampleRejectsBadParameters) {
  EXPECT_EQ(run({"sample", "--dist", "gamma", "--alpha", "0", "--mean", "2"}).code, kExitUsage);
  EXPECT_EQ(run({"sample", "--dist", "exp", "--rate", "-1"}).code, kExitUsage);
  EXPECT_EQ(run({"sample", "--dist", "weibull"}).code, kExitUsage);
  EXPECT_EQ(run({"sample", "--rate", "1", "--mean", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"sample", "--preset", "calm"}).code, kExitUsage);
  EXPECT_EQ(run({"sample", "--n", "1"}).code, kExitUsage);
}

TEST_F(CliTest, SeedEnvironmentOverridesFlag) {
  run({"sample", "--n", "500", "--seed", "5", "--out", path("flag")});
  setenv("SERVINGBENCH_SEED", "5", 1);
  run({"sample", "--n", "500", "--seed", "6", "--out", path("env")});
  EXPECT_EQ(load(path("flag/report.json"))["gaps_digest"], load(path("env/report.json"))["gaps_digest"]);
  setenv("SERVINGBENCH_SEED", "five", 1);
  EXPECT_EQ(run({"sample", "--n", "500"}).code, kExitUsage);
}

TEST_F(CliTest, ReplayOfSampleMatches) {
  run({"sample", "--dist", "gamma", "--alpha", "1.2", "--mean", "2", "--n", "3000", "--out", path("orig")});
  const auto r = run({"replay", "--report", path("orig/report.json"), "--out", path("again")});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_EQ(load(path("orig/report.json"))["fit"], load(path("again/report.json"))["fit"]);
}

TEST_F(CliTest, ReplayDetectsTampering) {
  run({"sample", "--n", "2000", "--out", path("orig")});
  auto doc = load(path("orig/report.json"));
  doc["gaps_digest"] = "0000000000000000";
  std::ofstream(path("tampered.json")) << doc.dump(2);
  EXPECT_EQ(run({"replay", "--report", path("tampered.json"), "--out", path("again")}).code, kExitThreshold);
  EXPECT_EQ(run({"replay", "--report", path("missing.json")}).code, kExitUsage);
}

TEST_F(CliTest, ProfileTableIsStable) {
  const auto a = run({"profile-table"});
  const auto b = run({"profile-table"});
  ASSERT_EQ(a.code, kExitOk);
  EXPECT_EQ(a.out, b.out);
  std::istringstream lines(a.out);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header, "profile,batch_size,per_sample_latency_ms,throughput_per_s,published_throughput_per_s,relative_error");
  EXPECT_EQ(first.rfind("base-fp32,1,2177.4900,0.46,0.46,", 0), 0u) << first;
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 37);

  const auto j = run({"profile-table", "--format", "json", "--profile", "fp16-onnx"});
  ASSERT_EQ(j.code, kExitOk);
  const auto doc = json::parse(j.out);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["profile"], "fp16-onnx");
  EXPECT_EQ(doc[0]["rows"].size(), 6u);

  EXPECT_EQ(run({"profile-table", "--out", path("table.csv")}).code, kExitOk);
  std::ifstream in(path("table.csv"));
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(in), {}), a.out);
}

TEST_F(CliTest, UnknownProfileListsBuiltins) {
  const auto r = run({"profile-table", "--profile", "gpt"});
  EXPECT_EQ(r.code, kExitUsage);
  for (const char* name : {"base-fp32", "fp32-pytorch", "fp16-pytorch", "fp32-onnx", "opt-onnx", "fp16-onnx"}) {
    EXPECT_NE(r.err.find(name), std::string::npos) << name;
  }
  EXPECT_EQ(run({"profile-table", "--format", "xml"}).code, kExitUsage);
}

TEST_F(CliTest, EmbeddedLoadtestWritesArtifacts) {
  const auto r = run({"loadtest", "--embedded", "fp16-onnx", "--requests", "20", "--time-scale", "0.01", "--out",
                      path("load")});
  ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_EQ(count_lines(path("load/records.csv")), 21u);
  EXPECT_GE(count_lines(path("load/traces.jsonl")), 1u);
  const auto doc = load(path("load/report.json"));
  EXPECT_EQ(doc["summary"]["total"], 20);
  EXPECT_EQ(doc["summary"]["failure_rate"], 0.0);
  EXPECT_FALSE(doc["payload_digest"].is_null());
  EXPECT_TRUE(doc["timeseries"].is_array());

  const auto again = run({"replay", "--report", path("load/report.json"), "--out", path("load2")});
  EXPECT_EQ(again.code, kExitOk) << again.out << again.err;
}

TEST_F(CliTest, LoadtestAgainstDeadTargetFails) {
  const auto r = run({"loadtest", "--target", "http://127.0.0.1:1", "--requests", "3", "--time-scale", "0.001",
                      "--out", path("dead")});
  EXPECT_EQ(r.code, kExitThreshold);
  EXPECT_EQ(load(path("dead/report.json"))["summary"]["failures"], 3);
}

TEST_F(CliTest, ChaosPlanChecks) {
  std::ofstream(path("overlap.json"))
      << R"([{"kind": "supervisor_pause", "at": 10, "duration": 5}, {"kind": "pod_kill", "at": 12}])";
  EXPECT_EQ(run({"chaos", "--plan", path("overlap.json"), "--out", path("c")}).code, kExitUsage);
  EXPECT_EQ(run({"chaos", "--plan", path("nothing.json"), "--out", path("c")}).code, kExitUsage);

  std::ofstream(path("empty.json")) << "[]";
  const auto r = run({"chaos", "--plan", path("empty.json"), "--settle", "10", "--time-scale", "0.05",
                      "--recovery-window", "3", "--out", path("c")});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  const auto doc = load(path("c/report.json"));
  EXPECT_EQ(doc["recovery"]["restart_count"], 0);
  EXPECT_EQ(doc["recovery"]["final_error_rate"], 0.0);
}

}  // namespace
}  // namespace servingbench::cli
