#include "servingbench/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "servingbench/arrivals.hpp"
#include "servingbench/batch_server.hpp"
#include "servingbench/errors.hpp"
#include "servingbench/loadgen.hpp"
#include "servingbench/metrics.hpp"
#include "servingbench/profiles.hpp"
#include "servingbench/report.hpp"
#include "servingbench/resilience.hpp"
#include "servingbench/statval.hpp"

namespace servingbench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_signaled{false};

void on_signal(int) { g_signaled.store(true); }

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string fmt_ms(const std::optional<double>& v) { return v ? fmt("%.1f", *v) : "n/a"; }

std::uint64_t effective_seed(std::uint64_t flag_value) {
  const char* env = std::getenv("SERVINGBENCH_SEED");
  if (!env || !*env) return flag_value;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(env, &used, 10);
    if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SERVINGBENCH_SEED is not an unsigned integer: ") + env);
  }
}

// ---- setups shared by the commands and replay ----

struct SampleSetup {
  arrivals::ArrivalProcess process = arrivals::make_exponential(0.5);
  std::size_t n = 10000;
  std::uint64_t seed = 42;
};

json echo(const SampleSetup& s) { return {{"process", report::to_json(s.process)}, {"n", s.n}, {"seed", s.seed}}; }

SampleSetup sample_setup_from(const json& j) {
  SampleSetup s;
  s.process = report::process_from_json(j.at("process"));
  s.n = j.at("n").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

struct LoadtestSetup {
  loadgen::ScenarioConfig scenario;
  std::optional<batch::ServerConfig> embedded;
  double window = 10.0;
};

json echo(const LoadtestSetup& s) {
  return {{"scenario", report::to_json(s.scenario)},
          {"embedded", s.embedded ? report::to_json(*s.embedded) : json(nullptr)},
          {"window_s", s.window}};
}

LoadtestSetup loadtest_setup_from(const json& j) {
  LoadtestSetup s;
  s.scenario = report::scenario_from_json(j.at("scenario"));
  if (j.contains("embedded") && !j["embedded"].is_null()) s.embedded = report::server_config_from_json(j["embedded"]);
  s.window = j.value("window_s", s.window);
  return s;
}

struct ChaosSetup {
  std::vector<resilience::DisruptionEvent> plan;
  loadgen::ScenarioConfig scenario;
  batch::ServerConfig server;
  resilience::SupervisorParams params;
  std::optional<double> settle;
  double window = 1.0;
};

json echo(const ChaosSetup& s) {
  return {{"plan", report::to_json(std::span<const resilience::DisruptionEvent>(s.plan))},
          {"scenario", report::to_json(s.scenario)},
          {"server", report::to_json(s.server)},
          {"supervisor", report::to_json(s.params)},
          {"settle_s", s.settle ? json(*s.settle) : json(nullptr)},
          {"window_s", s.window}};
}

ChaosSetup chaos_setup_from(const json& j) {
  ChaosSetup s;
  s.plan = report::plan_from_json(j.at("plan"));
  s.scenario = report::scenario_from_json(j.at("scenario"));
  s.server = report::server_config_from_json(j.at("server"));
  s.params = report::params_from_json(j.at("supervisor"));
  if (j.contains("settle_s") && !j["settle_s"].is_null()) s.settle = j["settle_s"].get<double>();
  s.window = j.value("window_s", s.window);
  return s;
}

// ---- execution ----

report::RunReport execute_sample(const SampleSetup& setup, std::ostream& out) {
  const auto gaps = arrivals::sample(setup.process, setup.seed, setup.n);
  const auto fit = statval::fit_report(gaps, setup.process, statval::default_grid(setup.process));
  const auto verdict = statval::evaluate(fit);

  report::RunReport r;
  r.command = "sample";
  r.config_echo = echo(setup);
  r.fit = fit;
  r.verdict = verdict;
  r.gaps_digest = report::digest(gaps);

  out << "process      " << arrivals::to_string(setup.process.kind) << ", mean "
      << fmt("%g", setup.process.theoretical_mean()) << " s\n"
      << "mean         " << fmt("%.4f", fit.empirical.mean) << " (theory " << fmt("%g", fit.theoretical_mean)
      << ")\n"
      << "variance     " << fmt("%.4f", fit.empirical.variance) << " (theory " << fmt("%g", fit.theoretical_variance)
      << ")\n"
      << "bandwidth    " << fmt("%.4f", fit.bandwidth) << "\n"
      << "density gap  " << fmt("%.4f", fit.max_abs_density_gap) << " max, " << fmt("%.4f", fit.l1_density_gap)
      << " L1\n"
      << "verdict      " << (verdict.passed() ? "pass" : "fail") << " (mean " << (verdict.mean_ok ? "ok" : "off")
      << ", variance " << (verdict.variance_ok ? "ok" : "off") << ", density " << (verdict.density_ok ? "ok" : "off")
      << ")\n";
  return r;
}

void write_records(const fs::path& path, std::span<const loadgen::RequestRecord> records) {
  std::ofstream csv(path, std::ios::binary | std::ios::trunc);
  if (!csv) throw ConfigError("cannot write " + path.string());
  metrics::write_records_csv(csv, records);
}

void print_summary(std::ostream& out, const metrics::LatencySummary& s) {
  out << "requests     " << s.total << " (" << s.failures << " failed, failure rate "
      << fmt("%.4f", s.failure_rate) << ")\n"
      << "duration     " << fmt("%.1f", s.duration) << " s, " << fmt("%.3f", s.rps) << " RPS\n"
      << "latency ms   p50 " << fmt_ms(s.p50) << "  p95 " << fmt_ms(s.p95) << "  p99 " << fmt_ms(s.p99) << "\n"
      << "response ms  min " << fmt_ms(s.min) << "  avg " << fmt_ms(s.avg) << "  max " << fmt_ms(s.max) << "\n";
}

report::RunReport execute_loadtest(const LoadtestSetup& setup, const fs::path& out_dir, std::ostream& out) {
  fs::create_directories(out_dir);
  auto scenario = setup.scenario;
  const auto payloads = loadgen::load_corpus(scenario.corpus_path, scenario.corpus_subset_size, scenario.corpus_seed);

  report::RunReport r;
  r.command = "loadtest";
  r.config_echo = echo(setup);
  r.gaps_digest = report::digest(loadgen::replay_gaps(scenario));
  r.payload_digest = report::digest(payloads);

  std::unique_ptr<batch::BatchServer> server;
  if (setup.embedded) {
    auto config = *setup.embedded;
    config.time_scale = scenario.time_scale;
    config.port = 0;
    const auto traces = out_dir / "traces.jsonl";
    fs::remove(traces);
    config.trace_path = traces.string();
    r.batch_traces_path = traces.string();
    server = std::make_unique<batch::BatchServer>(config);
    server->start();
    scenario.target_url = server->url();
    out << "embedded " << config.profile << " server on " << server->url() << "\n";
  }
  out << "running " << scenario.name << " (" << loadgen::to_string(scenario.mode) << " loop, "
      << scenario.total_requests << " requests) against " << scenario.target_url << "\n";
  const auto records = loadgen::run_scenario(scenario, payloads);
  if (server) server->stop_graceful();

  r.summary = metrics::summarize(records);
  r.timeseries = metrics::timeseries(records, setup.window);
  write_records(out_dir / "records.csv", records);
  report::write_json(out_dir / "report.json", report::to_json(r));
  print_summary(out, *r.summary);
  return r;
}

report::RunReport execute_chaos(const ChaosSetup& setup, const fs::path& out_dir, std::ostream& out) {
  fs::create_directories(out_dir);
  const auto payloads =
      loadgen::load_corpus(setup.scenario.corpus_path, setup.scenario.corpus_subset_size, setup.scenario.corpus_seed);

  report::RunReport r;
  r.command = "chaos";
  r.config_echo = echo(setup);
  r.payload_digest = report::digest(payloads);

  resilience::ChaosOptions options;
  options.settle = setup.settle;
  out << "chaos run: " << setup.plan.size() << " events, time scale " << fmt("%g", setup.params.time_scale) << "\n";
  auto result = resilience::run_chaos(setup.plan, setup.scenario, setup.server, setup.params, options);

  r.summary = metrics::summarize(result.records);
  r.timeseries = metrics::timeseries(result.records, setup.window);
  r.recovery = result.report;
  write_records(out_dir / "records.csv", result.records);
  report::write_json(out_dir / "report.json", report::to_json(r));

  for (const auto& e : result.report.per_event) {
    out << fmt("%7.1f", e.injected_at) << " s  " << resilience::to_string(e.event.kind) << ": " << e.failures_during
        << " failures, downtime " << fmt("%.1f", e.downtime) << " s, recovery " << fmt("%.1f", e.time_to_recovery)
        << " s" << (e.recovered ? "" : " (not recovered)") << "\n";
  }
  out << "restarts     " << result.report.restart_count << " (expected " << result.report.expected_restarts << ")\n"
      << "final error rate " << fmt("%.4f", result.report.final_error_rate) << "\n";
  print_summary(out, *r.summary);
  return r;
}

// ---- flag groups ----

struct ScenarioFlags {
  std::string scenario = "steady";
  std::size_t requests = 900;
  std::string mode = "closed";
  std::size_t users = 1;
  std::uint64_t seed = 42;
  std::string corpus = loadgen::default_corpus_path();
  std::size_t corpus_size = 1000;
  std::uint64_t corpus_seed = 42;
  double timeout = 30.0;
  double time_scale = 1.0;
  std::size_t max_in_flight = 1024;

  void add(CLI::App* app) {
    app->add_option("--scenario", scenario, "Arrival preset: steady, moderate or extreme")->capture_default_str();
    app->add_option("--requests", requests, "Number of requests")->capture_default_str();
    app->add_option("--mode", mode, "closed or open loop")->capture_default_str();
    app->add_option("--users", users, "Concurrent closed-loop users")->capture_default_str();
    app->add_option("--seed", seed, "Arrival seed (SERVINGBENCH_SEED overrides)")->capture_default_str();
    app->add_option("--corpus", corpus, "Payload corpus file")->capture_default_str();
    app->add_option("--corpus-size", corpus_size, "Payload subset size")->capture_default_str();
    app->add_option("--corpus-seed", corpus_seed, "Payload shuffle seed")->capture_default_str();
    app->add_option("--timeout", timeout, "Request timeout in seconds")->capture_default_str();
    app->add_option("--time-scale", time_scale, "Real seconds per nominal second")->capture_default_str();
    app->add_option("--max-in-flight", max_in_flight, "Open-loop concurrency cap")->capture_default_str();
  }

  loadgen::ScenarioConfig build() const {
    loadgen::ScenarioConfig c;
    const auto process = arrivals::find_preset(scenario);
    if (!process) throw ConfigError("unknown scenario '" + scenario + "' (steady, moderate, extreme)");
    c.name = scenario;
    c.process = *process;
    c.mode = loadgen::parse_mode(mode);
    c.total_requests = requests;
    c.seed = effective_seed(seed);
    c.corpus_path = corpus;
    c.corpus_subset_size = corpus_size;
    c.corpus_seed = corpus_seed;
    c.request_timeout = timeout;
    c.users = users;
    c.max_in_flight = max_in_flight;
    c.time_scale = time_scale;
    return c;
  }
};

struct ServerFlags {
  std::string profile = "fp16-onnx";
  int max_batch = 32;
  double window_ms = 10.0;
  bool adaptive = true;
  double floor_ms = 1.0;
  double ceiling_ms = 10.0;
  std::size_t queue_cap = 10000;
  double jitter_ms = 0.0;
  bool no_overhead = false;
  int worker_threads = 160;
  CLI::Option* floor_opt = nullptr;
  CLI::Option* ceiling_opt = nullptr;

  void add(CLI::App* app, const std::string& profile_flag) {
    app->add_option(profile_flag, profile, "Built-in backend profile")->capture_default_str();
    app->add_option("--max-batch", max_batch, "Maximum batch size (1 disables batching)")->capture_default_str();
    app->add_option("--window-ms", window_ms, "Initial batch window")->capture_default_str();
    app->add_flag("--adaptive,!--no-adaptive", adaptive, "Adapt the window to arrival gaps");
    floor_opt = app->add_option("--window-floor-ms", floor_ms, "Adaptive window floor");
    ceiling_opt = app->add_option("--window-ceiling-ms", ceiling_ms, "Adaptive window ceiling");
    app->add_option("--queue-cap", queue_cap, "Request queue capacity")->capture_default_str();
    app->add_option("--jitter-ms", jitter_ms, "Gaussian service-time jitter sigma")->capture_default_str();
    app->add_flag("--no-overhead", no_overhead, "Drop the per-request handling overhead");
    app->add_option("--worker-threads", worker_threads, "HTTP worker threads")->capture_default_str();
  }

  batch::ServerConfig build() const {
    batch::ServerConfig c;
    c.profile = profile;
    c.policy.max_batch_size = max_batch;
    c.policy.max_batch_window_ms = window_ms;
    c.policy.adaptive = adaptive;
    c.policy.window_floor_ms = floor_opt->count() ? floor_ms : std::min(floor_ms, window_ms);
    c.policy.window_ceiling_ms = ceiling_opt->count() ? ceiling_ms : std::max(ceiling_ms, window_ms);
    c.queue_capacity = queue_cap;
    c.jitter_sigma_ms = jitter_ms;
    c.overhead = !no_overhead;
    c.worker_threads = worker_threads;
    c.validate();
    return c;
  }
};

int cmd_profile_table(const std::string& which, const std::string& format, const std::string& out_path,
                      std::ostream& out) {
  std::vector<batch::BackendProfile> selected;
  if (which == "all") {
    for (const auto& p : batch::builtin_profiles()) selected.push_back(p);
  } else {
    selected.push_back(batch::profile_by_name(which));
  }
  std::string text;
  if (format == "csv") {
    text = "profile,batch_size,per_sample_latency_ms,throughput_per_s,published_throughput_per_s,relative_error\n";
    for (const auto& p : selected) {
      for (std::size_t i = 0; i < batch::kCalibratedBatchSizes.size(); ++i) {
        const int b = batch::kCalibratedBatchSizes[i];
        const double tp = batch::profile_throughput(p, b);
        const double published = p.published_throughput[i];
        char row[256];
        std::snprintf(row, sizeof row, "%s,%d,%.4f,%.2f,%.2f,%.5f\n", p.name.c_str(), b, batch::profile_latency(p, b),
                      tp, published, std::abs(tp - published) / published);
        text += row;
      }
    }
  } else if (format == "json") {
    json doc = json::array();
    for (const auto& p : selected) {
      json rows = json::array();
      for (std::size_t i = 0; i < batch::kCalibratedBatchSizes.size(); ++i) {
        const int b = batch::kCalibratedBatchSizes[i];
        const double tp = batch::profile_throughput(p, b);
        const double published = p.published_throughput[i];
        rows.push_back({{"batch_size", b},
                        {"per_sample_latency_ms", batch::profile_latency(p, b)},
                        {"throughput_per_s", tp},
                        {"published_throughput_per_s", published},
                        {"relative_error", std::abs(tp - published) / published}});
      }
      doc.push_back({{"profile", p.name},
                     {"display_name", p.display_name},
                     {"rows", rows},
                     {"overhead", {{"floor_ms", p.overhead.floor_ms},
                                   {"exp_mean_ms", p.overhead.exp_mean_ms},
                                   {"cap_ms", p.overhead.cap_ms}}}});
    }
    text = doc.dump(2) + "\n";
  } else {
    throw ConfigError("format must be csv or json");
  }
  if (out_path.empty()) {
    out << text;
  } else {
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError("cannot write " + out_path);
    file << text;
  }
  return kExitOk;
}

int cmd_serve(const batch::ServerConfig& config, double run_for, std::ostream& out) {
  batch::BatchServer server(config);
  server.start();
  out << "serving " << (config.passthrough_url ? *config.passthrough_url : config.profile) << " on " << server.url()
      << std::endl;
  g_signaled.store(false);
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_signaled.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (run_for > 0.0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= run_for) {
      break;
    }
  }
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  server.stop_graceful();
  out << "stopped after " << server.responses_sent() << " responses" << std::endl;
  return kExitOk;
}

// Deterministic fields of a report: everything that does not depend on
// wall-clock timing.
json deterministic_fields(const json& doc) {
  json j;
  for (const char* key : {"command", "config_echo", "prng_id", "fit", "verdict", "gaps_digest", "payload_digest"}) {
    j[key] = doc.contains(key) ? doc[key] : json(nullptr);
  }
  return j;
}

int cmd_replay(const std::string& report_path, const fs::path& out_dir, std::ostream& out) {
  const auto original = report::read_report(report_path);
  const auto command = original.at("command").get<std::string>();
  const auto& config = original.at("config_echo");
  if (original.value("toolkit_version", "") != report::toolkit_version()) {
    out << "note: report was written by toolkit " << original.value("toolkit_version", "?") << ", this is "
        << report::toolkit_version() << "\n";
  }
  report::RunReport fresh;
  if (command == "sample") {
    fresh = execute_sample(sample_setup_from(config), out);
    fs::create_directories(out_dir);
    report::write_json(out_dir / "report.json", report::to_json(fresh));
  } else if (command == "loadtest") {
    fresh = execute_loadtest(loadtest_setup_from(config), out_dir, out);
  } else if (command == "chaos") {
    fresh = execute_chaos(chaos_setup_from(config), out_dir, out);
  } else {
    throw ConfigError("cannot replay command '" + command + "'");
  }
  const bool same = deterministic_fields(report::to_json(fresh)) == deterministic_fields(original);
  out << (same ? "deterministic fields match the original report\n"
               : "deterministic fields differ from the original report\n");
  return same ? kExitOk : kExitThreshold;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic-workload benchmarking for model-serving systems", "servingbench"};
  app.set_version_flag("--version", report::toolkit_version());
  app.require_subcommand(1);

  // sample
  auto* sample = app.add_subcommand("sample", "Sample inter-arrival gaps and validate their distribution");
  std::string dist = "exp";
  double rate = 0.5;
  double alpha = 1.0;
  double mean = 2.0;
  std::string preset;
  std::size_t n = 10000;
  std::uint64_t sample_seed = 42;
  std::string sample_out;
  sample->add_option("--dist", dist, "exp or gamma")->capture_default_str();
  auto* rate_opt = sample->add_option("--rate", rate, "Exponential rate per second")->capture_default_str();
  sample->add_option("--alpha", alpha, "Gamma shape")->capture_default_str();
  auto* mean_opt = sample->add_option("--mean", mean, "Target mean gap in seconds")->capture_default_str();
  sample->add_option("--preset", preset, "steady, moderate or extreme");
  sample->add_option("--n", n, "Number of gaps")->capture_default_str();
  sample->add_option("--seed", sample_seed, "Seed (SERVINGBENCH_SEED overrides)")->capture_default_str();
  sample->add_option("--out", sample_out, "Output directory for report.json");

  // serve
  auto* serve = app.add_subcommand("serve", "Host the embedded batching inference server");
  ServerFlags serve_flags;
  serve_flags.add(serve, "--profile");
  std::string passthrough;
  std::string host = "127.0.0.1";
  int port = 3000;
  double serve_scale = 1.0;
  std::string trace;
  std::uint64_t serve_seed = 42;
  double run_for = 0.0;
  serve->add_option("--passthrough", passthrough, "Forward batches to this /analyze-sentiment base URL");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
  serve->add_option("--time-scale", serve_scale, "Real seconds per nominal second")->capture_default_str();
  serve->add_option("--trace", trace, "Append batch traces (JSON lines) to this file");
  serve->add_option("--seed", serve_seed, "Seed (SERVINGBENCH_SEED overrides)")->capture_default_str();
  serve->add_option("--run-for", run_for, "Stop after this many seconds instead of waiting for a signal");

  // loadtest
  auto* loadtest = app.add_subcommand("loadtest", "Drive a scenario against a target and report metrics");
  ScenarioFlags load_flags;
  load_flags.add(loadtest);
  ServerFlags embedded_flags;
  embedded_flags.add(loadtest, "--embedded");
  std::string target;
  std::string load_out = "servingbench-out";
  double load_window = 10.0;
  auto* target_opt = loadtest->add_option("--target", target, "Base URL of the service under test");
  loadtest->add_option("--out", load_out, "Output directory")->capture_default_str();
  loadtest->add_option("--window", load_window, "Time-series window in seconds")->capture_default_str();

  // chaos
  auto* chaos = app.add_subcommand("chaos", "Run a disruption plan against a supervised embedded server");
  ScenarioFlags chaos_flags;
  chaos_flags.add(chaos);
  ServerFlags chaos_server;
  chaos_server.add(chaos, "--profile");
  std::string plan_path = resilience::default_plan_path();
  resilience::SupervisorParams params;
  double settle = 0.0;
  std::string chaos_out = "servingbench-chaos";
  double chaos_window = 1.0;
  chaos->add_option("--plan", plan_path, "Disruption plan (JSON array)")->capture_default_str();
  chaos->add_option("--health-interval", params.health_interval, "Seconds between health checks")
      ->capture_default_str();
  chaos->add_option("--readiness-delay", params.readiness_delay, "Seconds before a new instance serves")
      ->capture_default_str();
  chaos->add_option("--recovery-window", params.recovery_window, "Failure-free window that confirms recovery")
      ->capture_default_str();
  chaos->add_option("--failure-threshold", params.failure_threshold, "Failed probes before a restart")
      ->capture_default_str();
  auto* settle_opt = chaos->add_option("--settle", settle, "Seconds of load after the last event");
  chaos->add_option("--out", chaos_out, "Output directory")->capture_default_str();
  chaos->add_option("--window", chaos_window, "Time-series window in seconds")->capture_default_str();

  // profile-table
  auto* table = app.add_subcommand("profile-table", "Print the latency/throughput table of the built-in profiles");
  std::string table_profile = "all";
  std::string table_format = "csv";
  std::string table_out;
  table->add_option("--profile", table_profile, "all or a profile name")->capture_default_str();
  table->add_option("--format", table_format, "csv or json")->capture_default_str();
  table->add_option("--out", table_out, "Output file (default stdout)");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a command from the configuration echoed in its report");
  std::string replay_report;
  std::string replay_out = "servingbench-replay";
  replay->add_option("--report", replay_report, "report.json to replay")->required();
  replay->add_option("--out", replay_out, "Output directory")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sample->parsed()) {
      SampleSetup setup;
      if (!preset.empty()) {
        setup.process = arrivals::preset(preset);
      } else if (dist == "exp") {
        if (rate_opt->count() && mean_opt->count()) throw ConfigError("give --rate or --mean, not both");
        setup.process = arrivals::make_exponential(mean_opt->count() ? 1.0 / mean : rate);
      } else if (dist == "gamma") {
        setup.process = arrivals::make_gamma_scaled(alpha, mean);
      } else {
        throw ConfigError("--dist must be exp or gamma");
      }
      setup.n = n;
      setup.seed = effective_seed(sample_seed);
      const auto r = execute_sample(setup, out);
      if (!sample_out.empty()) {
        fs::create_directories(sample_out);
        report::write_json(fs::path(sample_out) / "report.json", report::to_json(r));
      }
      return r.verdict->passed() ? kExitOk : kExitThreshold;
    }
    if (serve->parsed()) {
      auto config = serve_flags.build();
      if (!passthrough.empty()) config.passthrough_url = passthrough;
      config.host = host;
      config.port = port;
      config.time_scale = serve_scale;
      if (!trace.empty()) config.trace_path = trace;
      config.seed = effective_seed(serve_seed);
      config.validate();
      return cmd_serve(config, run_for, out);
    }
    if (loadtest->parsed()) {
      LoadtestSetup setup;
      setup.scenario = load_flags.build();
      setup.window = load_window;
      if (target_opt->count()) {
        setup.scenario.target_url = target;
      } else {
        auto config = embedded_flags.build();
        config.seed = setup.scenario.seed;
        setup.embedded = config;
        setup.scenario.target_url = "embedded";
      }
      setup.scenario.validate();
      const auto r = execute_loadtest(setup, load_out, out);
      return r.summary->failure_rate == 0.0 ? kExitOk : kExitThreshold;
    }
    if (chaos->parsed()) {
      ChaosSetup setup;
      setup.plan = resilience::load_plan(plan_path);
      setup.scenario = chaos_flags.build();
      setup.server = chaos_server.build();
      setup.server.seed = setup.scenario.seed;
      setup.server.port = 0;
      params.time_scale = setup.scenario.time_scale;
      params.validate();
      setup.params = params;
      if (settle_opt->count()) setup.settle = settle;
      setup.window = chaos_window;
      const auto r = execute_chaos(setup, chaos_out, out);
      return r.recovery->final_error_rate == 0.0 ? kExitOk : kExitThreshold;
    }
    if (table->parsed()) return cmd_profile_table(table_profile, table_format, table_out, out);
    if (replay->parsed()) return cmd_replay(replay_report, replay_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace servingbench::cli
