#include "servingbench/report.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "servingbench/errors.hpp"
#include "servingbench/profiles.hpp"
#include "servingbench/rng.hpp"

namespace servingbench::report {

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string toolkit_version() { return SERVINGBENCH_VERSION; }

json to_json(const batch::BatchTrace& trace) {
  return {{"dispatched_at_s", trace.dispatched_at},
          {"batch_size", trace.batch_size},
          {"wait_of_oldest_ms", trace.wait_of_oldest_ms},
          {"service_time_ms", trace.service_time_ms},
          {"trigger", std::string(batch::to_string(trace.trigger))},
          {"window_ms", trace.window_ms}};
}

json to_json(const batch::BatchPolicy& policy) {
  return {{"max_batch_size", policy.max_batch_size},
          {"max_batch_window_ms", policy.max_batch_window_ms},
          {"adaptive", policy.adaptive},
          {"window_floor_ms", policy.window_floor_ms},
          {"window_ceiling_ms", policy.window_ceiling_ms}};
}

json to_json(const batch::ServerConfig& c) {
  return {{"profile", c.profile},
          {"passthrough_url", c.passthrough_url ? json(*c.passthrough_url) : json(nullptr)},
          {"policy", to_json(c.policy)},
          {"host", c.host},
          {"port", c.port},
          {"queue_capacity", c.queue_capacity},
          {"overhead", c.overhead},
          {"jitter_sigma_ms", c.jitter_sigma_ms},
          {"time_scale", c.time_scale},
          {"seed", c.seed},
          {"trace_path", c.trace_path ? json(*c.trace_path) : json(nullptr)},
          {"worker_threads", c.worker_threads}};
}

json to_json(const arrivals::ArrivalProcess& p) {
  json j = {{"kind", std::string(arrivals::to_string(p.kind))}, {"target_mean_s", p.target_mean}};
  if (p.kind == arrivals::Kind::Exponential) {
    j["rate_lambda"] = p.rate_lambda;
  } else {
    j["shape_alpha"] = p.shape_alpha;
    j["scale_theta_s"] = p.scale_theta;
  }
  j["theoretical_variance"] = p.theoretical_variance();
  return j;
}

json to_json(const arrivals::SampleStats& s) {
  return {{"count", s.count}, {"mean_s", s.mean}, {"variance", s.variance}};
}

json to_json(const statval::DensityCurve& curve) { return {{"grid", curve.grid}, {"values", curve.values}}; }

json to_json(const statval::FitReport& fit) {
  json bins = json::array();
  for (const auto& b : fit.histogram) bins.push_back({{"left", b.left}, {"right", b.right}, {"height", b.height}});
  return {{"empirical", to_json(fit.empirical)},
          {"theoretical_mean_s", fit.theoretical_mean},
          {"theoretical_variance", fit.theoretical_variance},
          {"bandwidth", fit.bandwidth},
          {"max_abs_density_gap", fit.max_abs_density_gap},
          {"l1_density_gap", fit.l1_density_gap},
          {"kde", to_json(fit.kde_curve)},
          {"pdf", to_json(fit.pdf_curve)},
          {"histogram", bins}};
}

json to_json(const statval::FitVerdict& v) {
  return {{"mean_ok", v.mean_ok}, {"variance_ok", v.variance_ok}, {"density_ok", v.density_ok},
          {"passed", v.passed()}};
}

json to_json(const metrics::LatencySummary& s) {
  return {{"p50_ms", optional_number(s.p50)},
          {"p95_ms", optional_number(s.p95)},
          {"p99_ms", optional_number(s.p99)},
          {"min_ms", optional_number(s.min)},
          {"avg_ms", optional_number(s.avg)},
          {"max_ms", optional_number(s.max)},
          {"rps", s.rps},
          {"failure_rate", s.failure_rate},
          {"total", s.total},
          {"failures", s.failures},
          {"duration_s", s.duration}};
}

json to_json(const metrics::TimeSeriesPoint& p) {
  return {{"window_start_s", p.window_start},
          {"rps", p.rps},
          {"error_rate", p.error_rate},
          {"avg_response_ms", optional_number(p.avg_response_ms)},
          {"completions", p.completions},
          {"failures", p.failures}};
}

json to_json(std::span<const metrics::TimeSeriesPoint> series) {
  json out = json::array();
  for (const auto& p : series) out.push_back(to_json(p));
  return out;
}

json to_json(const loadgen::ScenarioConfig& c) {
  return {{"name", c.name},
          {"process", to_json(c.process)},
          {"mode", std::string(loadgen::to_string(c.mode))},
          {"total_requests", c.total_requests},
          {"seed", c.seed},
          {"target_url", c.target_url},
          {"corpus_path", c.corpus_path},
          {"corpus_subset_size", c.corpus_subset_size},
          {"corpus_seed", c.corpus_seed},
          {"request_timeout_s", c.request_timeout},
          {"users", c.users},
          {"max_in_flight", c.max_in_flight},
          {"time_scale", c.time_scale}};
}

json to_json(const resilience::DisruptionEvent& e) {
  json j = {{"kind", std::string(resilience::to_string(e.kind))}, {"at", e.at}};
  if (!resilience::is_restart_class(e.kind)) j["duration"] = e.duration;
  return j;
}

json to_json(std::span<const resilience::DisruptionEvent> plan) {
  json out = json::array();
  for (const auto& e : plan) out.push_back(to_json(e));
  return out;
}

json to_json(const resilience::SupervisorParams& p) {
  return {{"health_interval_s", p.health_interval},
          {"readiness_delay_s", p.readiness_delay},
          {"probe_timeout_s", p.probe_timeout},
          {"failure_threshold", p.failure_threshold},
          {"max_restart_attempts", p.max_restart_attempts},
          {"recovery_window_s", p.recovery_window},
          {"time_scale", p.time_scale}};
}

json to_json(const resilience::RecoveryReport& r) {
  json events = json::array();
  for (const auto& e : r.per_event) {
    events.push_back({{"event", to_json(e.event)},
                      {"injected_at_s", e.injected_at},
                      {"failures_during", e.failures_during},
                      {"downtime_s", e.downtime},
                      {"time_to_recovery_s", e.time_to_recovery},
                      {"recovered", e.recovered}});
  }
  return {{"per_event", events},
          {"total_failures", r.total_failures},
          {"final_error_rate", r.final_error_rate},
          {"restart_count", r.restart_count},
          {"expected_restarts", r.expected_restarts},
          {"recovery_window_s", r.recovery_window},
          {"run_duration_s", r.run_duration},
          {"passed", r.passed()}};
}

batch::BatchPolicy policy_from_json(const json& j) {
  batch::BatchPolicy p;
  p.max_batch_size = field(j, "max_batch_size", p.max_batch_size);
  p.max_batch_window_ms = field(j, "max_batch_window_ms", p.max_batch_window_ms);
  p.adaptive = field(j, "adaptive", p.adaptive);
  p.window_floor_ms = field(j, "window_floor_ms", p.window_floor_ms);
  p.window_ceiling_ms = field(j, "window_ceiling_ms", p.window_ceiling_ms);
  return p;
}

batch::ServerConfig server_config_from_json(const json& j) {
  batch::ServerConfig c;
  c.profile = field(j, "profile", c.profile);
  c.passthrough_url = optional_string(j, "passthrough_url");
  if (j.contains("policy")) c.policy = policy_from_json(j["policy"]);
  c.host = field(j, "host", c.host);
  c.port = field(j, "port", c.port);
  c.queue_capacity = field(j, "queue_capacity", c.queue_capacity);
  c.overhead = field(j, "overhead", c.overhead);
  c.jitter_sigma_ms = field(j, "jitter_sigma_ms", c.jitter_sigma_ms);
  c.time_scale = field(j, "time_scale", c.time_scale);
  c.seed = field(j, "seed", c.seed);
  c.trace_path = optional_string(j, "trace_path");
  c.worker_threads = field(j, "worker_threads", c.worker_threads);
  return c;
}

arrivals::ArrivalProcess process_from_json(const json& j) {
  const auto kind = field<std::string>(j, "kind", "exponential");
  if (kind == "exponential") return arrivals::make_exponential(field(j, "rate_lambda", 0.5));
  if (kind == "gamma") return arrivals::make_gamma_scaled(field(j, "shape_alpha", 1.0), field(j, "target_mean_s", 2.0));
  throw ConfigError("unknown arrival process kind '" + kind + "'");
}

loadgen::ScenarioConfig scenario_from_json(const json& j) {
  loadgen::ScenarioConfig c;
  c.name = field(j, "name", c.name);
  if (j.contains("process")) c.process = process_from_json(j["process"]);
  if (auto mode = optional_string(j, "mode")) c.mode = loadgen::parse_mode(*mode);
  c.total_requests = field(j, "total_requests", c.total_requests);
  c.seed = field(j, "seed", c.seed);
  c.target_url = field(j, "target_url", c.target_url);
  c.corpus_path = field(j, "corpus_path", c.corpus_path);
  c.corpus_subset_size = field(j, "corpus_subset_size", c.corpus_subset_size);
  c.corpus_seed = field(j, "corpus_seed", c.corpus_seed);
  c.request_timeout = field(j, "request_timeout_s", c.request_timeout);
  c.users = field(j, "users", c.users);
  c.max_in_flight = field(j, "max_in_flight", c.max_in_flight);
  c.time_scale = field(j, "time_scale", c.time_scale);
  return c;
}

resilience::DisruptionEvent event_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("disruption event needs a string 'kind'");
  }
  resilience::DisruptionEvent e;
  e.kind = resilience::parse_kind(j["kind"].get<std::string>());
  e.at = field(j, "at", e.at);
  e.duration = field(j, "duration", e.duration);
  return e;
}

std::vector<resilience::DisruptionEvent> plan_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("plan must be a JSON array");
  std::vector<resilience::DisruptionEvent> plan;
  for (const auto& item : j) plan.push_back(event_from_json(item));
  resilience::validate_plan(plan);
  return plan;
}

resilience::SupervisorParams params_from_json(const json& j) {
  resilience::SupervisorParams p;
  p.health_interval = field(j, "health_interval_s", p.health_interval);
  p.readiness_delay = field(j, "readiness_delay_s", p.readiness_delay);
  p.probe_timeout = field(j, "probe_timeout_s", p.probe_timeout);
  p.failure_threshold = field(j, "failure_threshold", p.failure_threshold);
  p.max_restart_attempts = field(j, "max_restart_attempts", p.max_restart_attempts);
  p.recovery_window = field(j, "recovery_window_s", p.recovery_window);
  p.time_scale = field(j, "time_scale", p.time_scale);
  return p;
}

json to_json(const RunReport& r) {
  json j = {{"schema_version", kSchemaVersion},
            {"toolkit_version", toolkit_version()},
            {"command", r.command},
            {"config_echo", r.config_echo},
            {"prng_id", std::string(kPrngId)}};
  j["fit"] = r.fit ? to_json(*r.fit) : json(nullptr);
  j["verdict"] = r.verdict ? to_json(*r.verdict) : json(nullptr);
  j["summary"] = r.summary ? to_json(*r.summary) : json(nullptr);
  j["timeseries"] = to_json(std::span<const metrics::TimeSeriesPoint>(r.timeseries));
  j["recovery"] = r.recovery ? to_json(*r.recovery) : json(nullptr);
  j["batch_traces_path"] = r.batch_traces_path ? json(*r.batch_traces_path) : json(nullptr);
  j["gaps_digest"] = r.gaps_digest ? json(*r.gaps_digest) : json(nullptr);
  j["payload_digest"] = r.payload_digest ? json(*r.payload_digest) : json(nullptr);
  return j;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ConfigError(path.string() + " is not a JSON object");
  if (field(doc, "schema_version", 0) != kSchemaVersion) {
    throw ConfigError(path.string() + ": unsupported schema_version");
  }
  return doc;
}

std::string digest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return hex(h);
}

std::string digest(std::span<const std::string> texts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : texts) {
    h ^= batch::stable_hash(t);
    h *= 0x100000001b3ULL;
  }
  return hex(h);
}

}  // namespace servingbench::report
