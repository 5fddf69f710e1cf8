// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "servingbench/arrivals.hpp"
#include "servingbench/batch_server.hpp"
#include "servingbench/cli.hpp"
#include "servingbench/loadgen.hpp"
#include "servingbench/metrics.hpp"
#include "servingbench/profiles.hpp"
#include "servingbench/resilience.hpp"
#include "servingbench/rng.hpp"
#include "servingbench/statval.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace servingbench;
using Clock = std::chrono::steady_clock;

// Distribution correctness.
constexpr std::size_t kSampleCount = 10000;
constexpr std::uint64_t kSampleSeed = 42;
constexpr double kPresetMean = 2.0;
constexpr double kMeanTol = 0.02;
constexpr double kVarianceTol = 0.10;
constexpr double kMaxDensityGap = 0.05;
constexpr double kPresetSeconds = 5.0;

// Percentile oracle.
constexpr int kPercentileLists = 10000;
constexpr std::size_t kMaxListSize = 1000;

// Profile fidelity.
constexpr double kProfileTol = 0.015;

// Closed-loop throughput law.
constexpr double kCompression = 0.01;
constexpr int kLawRequests = 500;
constexpr double kBaseRpsLo = 0.18, kBaseRpsHi = 0.23;
constexpr double kBaseAvgLoMs = 2600.0, kBaseAvgHiMs = 3200.0;
constexpr double kFp16RpsLo = 0.45, kFp16RpsHi = 0.50;

// Batching property.
constexpr std::size_t kBatchUsers = 64;
constexpr std::size_t kBatchRequests = 1500;
constexpr double kBatchThinkMean = 0.001;
constexpr double kBatchScale = 2.0;
constexpr double kBatchSpeedup = 2.0;

// Resilience.
constexpr double kChaosScale = 0.1;
constexpr double kRecoverySlack = 10.0;

struct Criterion {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

int cli(std::vector<std::string> args, std::string* captured = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (captured) *captured = out.str() + err.str();
  return code;
}

json load(const fs::path& p) { return json::parse(std::ifstream(p)); }

double oracle_percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

Criterion distribution_correctness() {
  struct Expect {
    const char* preset;
    double variance;
  };
  const Expect expects[] = {{"steady", 4.0}, {"moderate", 10.0 / 3.0}, {"extreme", 5.0}};
  Criterion c{"distribution correctness"};
  c.passed = true;
  for (const auto& e : expects) {
    const auto start = Clock::now();
    const auto process = arrivals::preset(e.preset);
    const auto gaps = arrivals::sample(process, kSampleSeed, kSampleCount);
    const auto fit = statval::fit_report(gaps, process, statval::default_grid(process));
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    const bool mean_ok = std::abs(fit.empirical.mean - kPresetMean) <= kMeanTol * kPresetMean;
    const bool var_ok = std::abs(fit.empirical.variance - e.variance) <= kVarianceTol * e.variance;
    const bool gap_ok = fit.max_abs_density_gap <= kMaxDensityGap;
    const bool time_ok = seconds < kPresetSeconds;
    c.passed = c.passed && mean_ok && var_ok && gap_ok && time_ok;
    c.detail += std::string(c.detail.empty() ? "" : "; ") + e.preset + " mean " + fmt("%.4f", fit.empirical.mean) +
                (mean_ok ? "" : "(x)") + " var " + fmt("%.4f", fit.empirical.variance) + (var_ok ? "" : "(x)") +
                " gap " + fmt("%.4f", fit.max_abs_density_gap) + (gap_ok ? "" : "(x)") + " " +
                fmt("%.2fs", seconds) + (time_ok ? "" : "(x)");
  }
  return c;
}

Criterion percentile_equivalence() {
  Xoshiro256 rng(20240501);
  Criterion c{"percentile oracle equivalence"};
  int mismatches = 0;
  for (int trial = 0; trial < kPercentileLists; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng() % kMaxListSize);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform() < 0.3 ? std::floor(rng.uniform() * 20) : rng.uniform() * 5000.0;
    double q = rng.uniform();
    if (q == 0.0) q = 1.0;
    for (double qq : {q, 0.5, 0.95, 0.99, 1.0}) {
      if (metrics::percentile(xs, qq) != oracle_percentile(xs, qq)) ++mismatches;
    }
  }
  c.passed = mismatches == 0;
  c.detail = std::to_string(kPercentileLists) + " lists, " + std::to_string(mismatches) + " mismatches";
  return c;
}

Criterion profile_fidelity() {
  Criterion c{"profile fidelity"};
  double worst = 0.0;
  std::string where;
  for (const auto& p : batch::builtin_profiles()) {
    for (std::size_t i = 0; i < batch::kCalibratedBatchSizes.size(); ++i) {
      const int b = batch::kCalibratedBatchSizes[i];
      const double modelled = 1000.0 / batch::profile_latency(p, b);
      const double err = std::abs(modelled - p.published_throughput[i]) / p.published_throughput[i];
      if (err > worst) {
        worst = err;
        where = p.name + " b=" + std::to_string(b);
      }
    }
  }
  c.passed = worst <= kProfileTol;
  c.detail = "worst relative error " + fmt("%.5f", worst) + " at " + where;
  return c;
}

Criterion throughput_law(const fs::path& work) {
  Criterion c{"closed-loop throughput law"};
  const std::string scale = fmt("%g", kCompression);
  const std::string requests = std::to_string(kLawRequests);
  const auto start = Clock::now();
  cli({"loadtest", "--embedded", "base-fp32", "--max-batch", "1", "--requests", requests, "--time-scale", scale,
       "--out", (work / "law-base").string()});
  cli({"loadtest", "--embedded", "fp16-onnx", "--requests", requests, "--time-scale", scale, "--out",
       (work / "law-fp16").string()});
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const auto base = load(work / "law-base" / "report.json")["summary"];
  const auto fp16 = load(work / "law-fp16" / "report.json")["summary"];
  const double base_rps = base["rps"], base_avg = base["avg_ms"], fp16_rps = fp16["rps"];
  const double failures = base["failure_rate"].get<double>() + fp16["failure_rate"].get<double>();
  c.passed = base_rps >= kBaseRpsLo && base_rps <= kBaseRpsHi && base_avg >= kBaseAvgLoMs &&
             base_avg <= kBaseAvgHiMs && fp16_rps >= kFp16RpsLo && fp16_rps <= kFp16RpsHi && failures == 0.0 &&
             base["total"] == kLawRequests && fp16["total"] == kLawRequests;
  c.detail = "base rps " + fmt("%.4f", base_rps) + " avg " + fmt("%.1f ms", base_avg) + "; fp16 rps " +
             fmt("%.4f", fp16_rps) + "; failure rate " + fmt("%g", failures) + "; " + fmt("%.1fs real", seconds);
  return c;
}

struct BatchRun {
  double rps = 0.0;
  bool conserved = false;
};

BatchRun run_batching(const batch::BatchPolicy& policy) {
  batch::ServerConfig config;
  config.profile = "fp16-onnx";
  config.policy = policy;
  config.port = 0;
  config.overhead = false;
  config.time_scale = kBatchScale;
  batch::BatchServer server(config);
  server.start();

  loadgen::ScenarioConfig scenario;
  scenario.name = "batching";
  scenario.process = arrivals::make_exponential(1.0 / kBatchThinkMean);
  scenario.total_requests = kBatchRequests;
  scenario.users = kBatchUsers;
  scenario.target_url = server.url();
  scenario.time_scale = kBatchScale;
  const auto records = loadgen::run_scenario(scenario);
  server.stop_graceful();

  const auto summary = metrics::summarize(records);
  std::vector<std::size_t> indices;
  for (const auto& r : records) indices.push_back(r.index);
  std::sort(indices.begin(), indices.end());
  bool unique = true;
  for (std::size_t i = 0; i < indices.size(); ++i) unique = unique && indices[i] == i;
  std::uint64_t batched = 0;
  for (const auto& t : server.traces()) batched += static_cast<std::uint64_t>(t.batch_size);
  const bool conserved = unique && records.size() == kBatchRequests && summary.failures == 0 &&
                         server.batcher().accepted() == kBatchRequests &&
                         server.batcher().completed() == kBatchRequests && batched == kBatchRequests &&
                         server.responses_sent() == kBatchRequests;
  return {summary.rps, conserved};
}

Criterion batching_property() {
  Criterion c{"batching property"};
  batch::BatchPolicy adaptive;
  adaptive.max_batch_size = 32;
  adaptive.max_batch_window_ms = 10.0;
  adaptive.adaptive = true;
  const auto batched = run_batching(adaptive);
  const auto single = run_batching(batch::BatchPolicy::unbatched());
  const double ratio = batched.rps / single.rps;
  c.passed = ratio >= kBatchSpeedup && batched.conserved && single.conserved;
  c.detail = "batched " + fmt("%.1f", batched.rps) + " rps vs unbatched " + fmt("%.1f", single.rps) + " rps (" +
             fmt("%.2fx", ratio) + "); conservation " + (batched.conserved && single.conserved ? "exact" : "broken");
  return c;
}

Criterion resilience_suite(const fs::path& work) {
  Criterion c{"resilience suite"};
  const auto start = Clock::now();
  std::string log;
  const int code = cli({"chaos", "--time-scale", fmt("%g", kChaosScale), "--out", (work / "chaos").string()}, &log);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (!fs::exists(work / "chaos" / "report.json")) {
    c.detail = "chaos command failed (exit " + std::to_string(code) + "): " + log;
    return c;
  }
  const auto doc = load(work / "chaos" / "report.json");
  const auto& rec = doc["recovery"];
  const auto params = doc["config_echo"]["supervisor"];
  const double bound = params["health_interval_s"].get<double>() + params["readiness_delay_s"].get<double>() +
                       kRecoverySlack;
  const auto plan = resilience::load_plan(resilience::default_plan_path());
  int restart_class = 0;
  for (const auto& e : plan) restart_class += resilience::is_restart_class(e.kind);

  bool ok = rec["final_error_rate"] == 0.0 && rec["restart_count"] == restart_class &&
            rec["per_event"].size() == plan.size();
  std::string detail = "final error rate " + fmt("%g", rec["final_error_rate"].get<double>()) + ", restarts " +
                       std::to_string(rec["restart_count"].get<int>()) + "/" + std::to_string(restart_class);
  for (const auto& e : rec["per_event"]) {
    const std::string kind = e["event"]["kind"];
    const std::size_t failures = e["failures_during"];
    const double ttr = e["time_to_recovery_s"];
    if (kind == "supervisor_pause" || kind == "runtime_pause") {
      ok = ok && failures == 0;
    } else if (kind == "rollout_restart" || kind == "pod_kill") {
      ok = ok && failures >= 1 && e["recovered"] == true && ttr <= bound;
    }
    detail += "; " + kind + " " + std::to_string(failures) + " failed, ttr " + fmt("%.1fs", ttr);
  }
  c.passed = ok;
  c.detail = detail + " (bound " + fmt("%.0fs", bound) + ", " + fmt("%.1fs real", seconds) + ")";
  return c;
}

Criterion reproducibility(const fs::path& work) {
  Criterion c{"reproducibility"};
  c.passed = true;
  // Direct check of the gap stream.
  const auto a = arrivals::sample(arrivals::preset("extreme"), 7, 5000);
  const auto b = arrivals::sample(arrivals::preset("extreme"), 7, 5000);
  const bool gaps_equal = a == b;
  c.passed = gaps_equal;
  c.detail = std::string("gap stream ") + (gaps_equal ? "bit-exact" : "differs");

  cli({"sample", "--preset", "moderate", "--n", std::to_string(kSampleCount), "--out", (work / "sample").string()});
  const std::vector<std::pair<std::string, fs::path>> reports{
      {"sample", work / "sample" / "report.json"},
      {"loadtest", work / "law-fp16" / "report.json"},
      {"chaos", work / "chaos" / "report.json"},
  };
  for (const auto& [name, path] : reports) {
    if (!fs::exists(path)) {
      c.passed = false;
      c.detail += "; " + name + " report missing";
      continue;
    }
    const auto out = work / ("replay-" + name);
    const int code = cli({"replay", "--report", path.string(), "--out", out.string()});
    bool same = code == 0;
    const auto original = load(path);
    const auto fresh = load(out / "report.json");
    for (const char* key : {"gaps_digest", "payload_digest", "config_echo", "fit"}) {
      same = same && original[key] == fresh[key];
    }
    c.passed = c.passed && same;
    c.detail += "; " + name + (same ? " matches" : " differs");
  }
  return c;
}

}  // namespace

int main() {
  const auto work = fs::temp_directory_path() / "servingbench-acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::function<Criterion()>> checks{
      distribution_correctness,
      percentile_equivalence,
      profile_fidelity,
      [&] { return throughput_law(work); },
      batching_property,
      [&] { return resilience_suite(work); },
      [&] { return reproducibility(work); },
  };
  int failed = 0;
  for (const auto& check : checks) {
    Criterion c;
    try {
      c = check();
    } catch (const std::exception& e) {
      c.detail = std::string("error: ") + e.what();
    }
    if (!c.passed) ++failed;
    std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << std::endl;
  }
  std::cout << (checks.size() - failed) << "/" << checks.size() << " criteria passed" << std::endl;
  fs::remove_all(work);
  return failed == 0 ? 0 : 1;
}
