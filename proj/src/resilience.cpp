#include "servingbench/resilience.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "servingbench/errors.hpp"

namespace servingbench::resilience {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct KindName {
  DisruptionKind kind;
  std::string_view snake;
  std::string_view camel;
};

constexpr KindName kKindNames[] = {
    {DisruptionKind::SupervisorPause, "supervisor_pause", "SupervisorPause"},
    {DisruptionKind::RuntimePause, "runtime_pause", "RuntimePause"},
    {DisruptionKind::RolloutRestart, "rollout_restart", "RolloutRestart"},
    {DisruptionKind::ReplicaReplace, "replica_replace", "ReplicaReplace"},
    {DisruptionKind::PodKill, "pod_kill", "PodKill"},
};

bool is_pause(DisruptionKind kind) {
  return kind == DisruptionKind::SupervisorPause || kind == DisruptionKind::RuntimePause;
}

Clock::duration scaled(double nominal_seconds, double time_scale) {
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(nominal_seconds * time_scale));
}

bool sleep_until(Clock::time_point deadline, std::stop_token stop) {
  std::mutex mu;
  std::condition_variable_any cv;
  std::unique_lock lock(mu);
  return !cv.wait_until(lock, stop, deadline, [] { return false; }) && !stop.stop_requested();
}

double outcome_time(const loadgen::RequestRecord& r) { return r.completed_at.value_or(r.sent_at); }

}  // namespace

std::string_view to_string(DisruptionKind kind) {
  for (const auto& n : kKindNames) {
    if (n.kind == kind) return n.snake;
  }
  return "unknown";
}

DisruptionKind parse_kind(std::string_view text) {
  for (const auto& n : kKindNames) {
    if (text == n.snake || text == n.camel) return n.kind;
  }
  throw ConfigError("unknown disruption kind '" + std::string(text) + "'");
}

bool is_restart_class(DisruptionKind kind) { return !is_pause(kind); }

void validate_plan(std::span<const DisruptionEvent> plan) {
  double busy_until = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& e = plan[i];
    const std::string where = "plan event " + std::to_string(i);
    if (!(e.at >= 0.0) || !std::isfinite(e.at)) throw ConfigError(where + ": 'at' must be >= 0");
    if (is_pause(e.kind)) {
      if (!(e.duration > 0.0) || !std::isfinite(e.duration)) throw ConfigError(where + ": pause needs a positive duration");
    } else if (e.duration != 0.0) {
      throw ConfigError(where + ": duration applies to pauses only");
    }
    if (i > 0 && e.at < plan[i - 1].at) throw ConfigError(where + ": events must be sorted by 'at'");
    if (i > 0 && e.at < busy_until) throw ConfigError(where + ": overlaps the previous event");
    busy_until = e.at + e.duration;
  }
}

std::vector<DisruptionEvent> load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw ConfigError(path.string() + ": plan must be a JSON array");
  std::vector<DisruptionEvent> plan;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("kind") || !item["kind"].is_string() || !item.contains("at") ||
        !item["at"].is_number()) {
      throw ConfigError(path.string() + ": each event needs a string 'kind' and a numeric 'at'");
    }
    DisruptionEvent e;
    e.kind = parse_kind(item["kind"].get<std::string>());
    e.at = item["at"].get<double>();
    if (item.contains("duration")) {
      if (!item["duration"].is_number()) throw ConfigError(path.string() + ": 'duration' must be a number");
      e.duration = item["duration"].get<double>();
    }
    plan.push_back(e);
  }
  validate_plan(plan);
  return plan;
}

std::string default_plan_path() { return std::string(SERVINGBENCH_DATA_DIR) + "/default-plan.json"; }

void SupervisorParams::validate() const {
  if (!(health_interval > 0.0)) throw ConfigError("health interval must be positive");
  if (!(readiness_delay >= 0.0)) throw ConfigError("readiness delay must be >= 0");
  if (!(probe_timeout > 0.0)) throw ConfigError("probe timeout must be positive");
  if (failure_threshold < 1) throw ConfigError("failure threshold must be >= 1");
  if (max_restart_attempts < 1) throw ConfigError("max restart attempts must be >= 1");
  if (!(recovery_window > 0.0)) throw ConfigError("recovery window must be positive");
  if (!(time_scale > 0.0)) throw ConfigError("time scale must be positive");
}

Supervisor::Supervisor(batch::ServerConfig server_config, SupervisorParams params)
    : server_config_(std::move(server_config)), params_(params), started_at_(Clock::now()) {
  params_.validate();
  server_config_.time_scale = params_.time_scale;
  server_config_.validate();
}

Supervisor::~Supervisor() { stop(); }

void Supervisor::start() {
  {
    std::lock_guard lock(mu_);
    if (running_) throw ServiceError("supervisor already running");
  }
  started_at_ = Clock::now();
  launch_instance();
  {
    std::lock_guard lock(mu_);
    if (aborted_) throw ServiceError(abort_reason_);
    running_ = true;
  }
  note("instance started on port " + std::to_string(port()));
  prober_ = std::jthread([this](std::stop_token stop) { probe_loop(stop); });
}

void Supervisor::stop() {
  stop_source_.request_stop();
  prober_.request_stop();
  if (prober_.joinable()) prober_.join();
  std::shared_ptr<batch::BatchServer> inst;
  std::vector<std::shared_ptr<batch::BatchServer>> retired;
  {
    std::lock_guard transition(transition_mu_);
    std::lock_guard lock(mu_);
    running_ = false;
    inst = std::move(instance_);
    retired.swap(retired_);
  }
  if (inst) inst->stop_immediate();
}

bool Supervisor::running() const {
  std::lock_guard lock(mu_);
  return running_ && !aborted_;
}

bool Supervisor::aborted() const {
  std::lock_guard lock(mu_);
  return aborted_;
}

std::string Supervisor::abort_reason() const {
  std::lock_guard lock(mu_);
  return abort_reason_;
}

int Supervisor::restart_count() const {
  std::lock_guard lock(mu_);
  return restart_count_;
}

int Supervisor::port() const {
  std::lock_guard lock(mu_);
  return server_config_.port;
}

std::string Supervisor::url() const {
  std::lock_guard lock(mu_);
  return "http://" + server_config_.host + ":" + std::to_string(server_config_.port);
}

bool Supervisor::instance_alive() const {
  auto inst = current();
  return inst && inst->alive();
}

std::vector<LogEntry> Supervisor::log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

std::shared_ptr<batch::BatchServer> Supervisor::current() const {
  std::lock_guard lock(mu_);
  return instance_;
}

void Supervisor::note(std::string what) {
  const double at = std::chrono::duration<double>(Clock::now() - started_at_).count() / params_.time_scale;
  std::lock_guard lock(log_mu_);
  log_.push_back({at, std::move(what)});
}

bool Supervisor::wait_nominal(double seconds, std::stop_token stop) const {
  return sleep_until(Clock::now() + scaled(seconds, params_.time_scale), stop);
}

// Binds a fresh instance on the supervised port, retrying every
// health_interval; gives up after max_restart_attempts.
void Supervisor::launch_instance() {
  std::string last_error;
  for (int attempt = 1; attempt <= params_.max_restart_attempts; ++attempt) {
    batch::ServerConfig config;
    {
      std::lock_guard lock(mu_);
      config = server_config_;
    }
    try {
      auto inst = std::make_shared<batch::BatchServer>(config);
      inst->start();
      std::lock_guard lock(mu_);
      if (server_config_.port == 0) server_config_.port = inst->port();
      instance_ = std::move(inst);
      return;
    } catch (const ServiceError& e) {
      last_error = e.what();
      note("start attempt " + std::to_string(attempt) + " failed: " + last_error);
    }
    if (!wait_nominal(params_.health_interval, stop_source_.get_token())) break;
  }
  std::lock_guard lock(mu_);
  aborted_ = true;
  abort_reason_ = "restart failed after " + std::to_string(params_.max_restart_attempts) + " attempts: " + last_error;
}

void Supervisor::restart_locked(std::unique_lock<std::mutex>& transition, const std::string& cause) {
  (void)transition;
  note("restarting: " + cause);
  {
    std::lock_guard lock(mu_);
    if (instance_) retired_.push_back(std::move(instance_));
    consecutive_failures_ = 0;
  }
  if (!wait_nominal(params_.readiness_delay, stop_source_.get_token())) return;
  launch_instance();
  {
    std::lock_guard lock(mu_);
    if (aborted_) return;
    ++restart_count_;
  }
  note("instance ready");
}

bool Supervisor::probe_once() const {
  httplib::Client client(url());
  const auto timeout = std::chrono::microseconds(
      static_cast<std::int64_t>(std::llround(params_.probe_timeout * params_.time_scale * 1e6)));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Get("/healthz");
  return res && res->status == 200;
}

void Supervisor::probe_loop(std::stop_token stop) {
  while (wait_nominal(params_.health_interval, stop)) {
    std::unique_lock transition(transition_mu_);
    {
      std::lock_guard lock(mu_);
      if (aborted_) return;
      if (probing_paused_until_ && Clock::now() < *probing_paused_until_) continue;
    }
    auto inst = current();
    if (!inst || !inst->alive()) {
      restart_locked(transition, "instance not running");
      continue;
    }
    if (probe_once()) {
      std::lock_guard lock(mu_);
      consecutive_failures_ = 0;
      continue;
    }
    int failures = 0;
    {
      std::lock_guard lock(mu_);
      failures = ++consecutive_failures_;
    }
    note("health probe failed (" + std::to_string(failures) + ")");
    if (failures >= params_.failure_threshold) {
      inst->kill();
      restart_locked(transition, "health probes failing");
    }
  }
}

void Supervisor::pause_probing(double seconds) {
  {
    std::lock_guard lock(mu_);
    probing_paused_until_ = Clock::now() + scaled(seconds, params_.time_scale);
  }
  note("probing paused");
  wait_nominal(seconds, stop_source_.get_token());
  note("probing resumed");
}

void Supervisor::pause_runtime(double seconds) {
  auto inst = current();
  if (!inst) throw ServiceError("no serving instance to pause");
  inst->pause();
  note("runtime paused");
  wait_nominal(seconds, stop_source_.get_token());
  inst->resume();
  note("runtime resumed");
}

void Supervisor::rollout_restart() {
  std::unique_lock transition(transition_mu_);
  auto inst = current();
  note("rollout: stopping instance");
  if (inst) inst->stop_graceful();
  restart_locked(transition, "rollout");
}

void Supervisor::replica_replace() {
  auto inst = current();
  if (inst) inst->stop_immediate();
  note("replica replaced: instance stopped");
}

void Supervisor::pod_kill() {
  auto inst = current();
  if (inst) inst->kill();
  note("pod killed");
}

Acknowledgment inject(const DisruptionEvent& event, Supervisor& supervisor, double injected_at) {
  if (!supervisor.running()) throw ServiceError("supervisor is not running");
  const auto start = Clock::now();
  switch (event.kind) {
    case DisruptionKind::SupervisorPause: supervisor.pause_probing(event.duration); break;
    case DisruptionKind::RuntimePause: supervisor.pause_runtime(event.duration); break;
    case DisruptionKind::RolloutRestart: supervisor.rollout_restart(); break;
    case DisruptionKind::ReplicaReplace: supervisor.replica_replace(); break;
    case DisruptionKind::PodKill: supervisor.pod_kill(); break;
  }
  const double took = std::chrono::duration<double>(Clock::now() - start).count() / supervisor.params().time_scale;
  return {event, injected_at, injected_at + took};
}

bool RecoveryReport::passed() const {
  if (final_error_rate != 0.0 || restart_count != expected_restarts) return false;
  return std::all_of(per_event.begin(), per_event.end(), [](const EventOutcome& e) { return e.recovered; });
}

RecoveryReport compute_recovery(std::span<const loadgen::RequestRecord> records,
                                std::span<const Acknowledgment> injections, const SupervisorParams& params,
                                double run_duration) {
  RecoveryReport report;
  report.recovery_window = params.recovery_window;
  report.run_duration = run_duration;

  std::vector<double> successes;
  std::vector<std::vector<double>> failures(injections.size());
  std::size_t tail_total = 0;
  std::size_t tail_failures = 0;
  const double tail_start = run_duration - params.recovery_window;
  for (const auto& r : records) {
    const double t = outcome_time(r);
    const bool in_tail = t >= tail_start && t <= run_duration;
    if (in_tail) ++tail_total;
    if (r.status.ok()) {
      successes.push_back(t);
      continue;
    }
    ++report.total_failures;
    if (in_tail) ++tail_failures;
    if (injections.empty()) continue;
    std::size_t owner = 0;
    for (std::size_t i = 0; i < injections.size(); ++i) {
      if (injections[i].injected_at - params.health_interval <= t) owner = i;
    }
    failures[owner].push_back(t);
  }
  std::sort(successes.begin(), successes.end());
  report.final_error_rate = tail_total ? static_cast<double>(tail_failures) / static_cast<double>(tail_total) : 0.0;

  for (std::size_t i = 0; i < injections.size(); ++i) {
    EventOutcome out;
    out.event = injections[i].event;
    out.injected_at = injections[i].injected_at;
    if (is_restart_class(out.event.kind)) ++report.expected_restarts;
    auto& fails = failures[i];
    std::sort(fails.begin(), fails.end());
    out.failures_during = fails.size();
    if (!fails.empty()) {
      const double at = out.injected_at;
      auto before = std::lower_bound(successes.begin(), successes.end(), fails.front());
      const double last_good = before == successes.begin() ? 0.0 : *std::prev(before);
      const double outage_start = std::max(at, last_good);
      auto after = std::upper_bound(successes.begin(), successes.end(), fails.back());
      const double next_window = i + 1 < injections.size()
                                     ? injections[i + 1].injected_at - params.health_interval
                                     : std::numeric_limits<double>::infinity();
      if (after == successes.end()) {
        out.recovered = false;
        out.time_to_recovery = std::max(0.0, run_duration - at);
        out.downtime = std::clamp(run_duration - outage_start, 0.0, out.time_to_recovery);
      } else {
        const double recovery = *after;
        out.time_to_recovery = std::max(0.0, recovery - at);
        out.downtime = std::clamp(recovery - outage_start, 0.0, out.time_to_recovery);
        // The trailing failure-free window must fit in the run (or be cut
        // short by the next event).
        out.recovered = std::min(recovery + params.recovery_window, next_window) <= run_duration;
      }
    }
    report.per_event.push_back(out);
  }
  return report;
}

double default_settle(const SupervisorParams& params) {
  return params.readiness_delay + params.failure_threshold * (params.health_interval + params.probe_timeout) +
         2.0 * params.recovery_window;
}

ChaosResult run_chaos(std::span<const DisruptionEvent> plan, loadgen::ScenarioConfig scenario,
                      const batch::ServerConfig& server_config, const SupervisorParams& params,
                      const ChaosOptions& options) {
  validate_plan(plan);
  params.validate();
  scenario.time_scale = params.time_scale;

  double plan_end = 0.0;
  for (const auto& e : plan) plan_end = std::max(plan_end, e.at + e.duration);
  const double run_until = plan_end + options.settle.value_or(default_settle(params));
  const double mean_gap = scenario.process.theoretical_mean();
  const auto needed = static_cast<std::size_t>(std::ceil(3.0 * run_until / mean_gap)) + 100;
  scenario.total_requests = std::max(scenario.total_requests, needed);

  const auto payloads = loadgen::load_corpus(scenario.corpus_path, scenario.corpus_subset_size, scenario.corpus_seed);

  Supervisor supervisor(server_config, params);
  supervisor.start();
  scenario.target_url = supervisor.url();
  scenario.validate();

  ChaosResult result;
  const auto origin = Clock::now();
  auto nominal_now = [&] {
    return std::chrono::duration<double>(Clock::now() - origin).count() / params.time_scale;
  };

  std::jthread load([&](std::stop_token stop) {
    result.records = loadgen::run_scenario(scenario, payloads, stop, origin);
  });
  for (const auto& event : plan) {
    std::this_thread::sleep_until(origin + scaled(event.at, params.time_scale));
    auto ack = inject(event, supervisor, nominal_now());
    ack.completed_at = nominal_now();
    result.injections.push_back(ack);
  }
  std::this_thread::sleep_until(origin + scaled(run_until, params.time_scale));
  load.request_stop();
  load.join();

  result.run_duration = run_until;
  for (const auto& r : result.records) result.run_duration = std::max(result.run_duration, outcome_time(r));
  result.supervisor_log = supervisor.log();
  const int restarts = supervisor.restart_count();
  supervisor.stop();

  result.report = compute_recovery(result.records, result.injections, params, result.run_duration);
  result.report.restart_count = restarts;
  return result;
}

}  // namespace servingbench::resilience
