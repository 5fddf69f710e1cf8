#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "servingbench/batch_server.hpp"
#include "servingbench/loadgen.hpp"

namespace servingbench::resilience {

enum class DisruptionKind { SupervisorPause, RuntimePause, RolloutRestart, ReplicaReplace, PodKill };

// "supervisor_pause", "runtime_pause", "rollout_restart", "replica_replace", "pod_kill"
std::string_view to_string(DisruptionKind kind);
DisruptionKind parse_kind(std::string_view text);
bool is_restart_class(DisruptionKind kind);

struct DisruptionEvent {
  DisruptionKind kind = DisruptionKind::PodKill;
  double at = 0.0;        // seconds from run start
  double duration = 0.0;  // pauses only

  bool operator==(const DisruptionEvent&) const = default;
};

// Throws ConfigError unless at >= 0, events are sorted, pauses have a
// positive duration and no event starts before the previous pause ends.
void validate_plan(std::span<const DisruptionEvent> plan);
std::vector<DisruptionEvent> load_plan(const std::filesystem::path& path);
std::string default_plan_path();

struct SupervisorParams {
  double health_interval = 1.0;
  double readiness_delay = 5.0;
  double probe_timeout = 1.0;
  int failure_threshold = 3;
  int max_restart_attempts = 10;
  double recovery_window = 10.0;  // trailing failure-free window
  double time_scale = 1.0;

  void validate() const;
};

struct LogEntry {
  double at = 0.0;  // nominal seconds since the supervisor started
  std::string what;
};

/// Keeps one BatchServer instance alive on a fixed port. Every
/// health_interval it checks the instance: a stopped instance is restarted
/// at once, and failure_threshold consecutive failed /healthz probes also
/// trigger a restart. A replacement binds only after readiness_delay.
class Supervisor {
 public:
  Supervisor(batch::ServerConfig server_config, SupervisorParams params);
  ~Supervisor();

  Supervisor(const Supervisor&) = delete;
  Supervisor& operator=(const Supervisor&) = delete;

  void start();
  void stop();

  bool running() const;
  bool aborted() const;
  std::string abort_reason() const;
  int restart_count() const;
  int port() const;
  std::string url() const;
  bool instance_alive() const;
  std::vector<LogEntry> log() const;
  const SupervisorParams& params() const { return params_; }

  // Disruptions. The pauses block for their duration.
  void pause_probing(double seconds);
  void pause_runtime(double seconds);
  void rollout_restart();
  void replica_replace();
  void pod_kill();

 private:
  using Clock = std::chrono::steady_clock;

  void probe_loop(std::stop_token stop);
  bool probe_once() const;
  void restart_locked(std::unique_lock<std::mutex>& lock, const std::string& cause);
  void launch_instance();
  bool wait_nominal(double seconds, std::stop_token stop) const;
  void note(std::string what);
  std::shared_ptr<batch::BatchServer> current() const;

  batch::ServerConfig server_config_;
  SupervisorParams params_;
  Clock::time_point started_at_;

  mutable std::mutex mu_;
  std::shared_ptr<batch::BatchServer> instance_;
  std::vector<std::shared_ptr<batch::BatchServer>> retired_;
  std::mutex transition_mu_;  // held across a restart
  bool running_ = false;
  bool aborted_ = false;
  std::string abort_reason_;
  int restart_count_ = 0;
  int consecutive_failures_ = 0;
  std::optional<Clock::time_point> probing_paused_until_;

  mutable std::mutex log_mu_;
  std::vector<LogEntry> log_;

  std::stop_source stop_source_;
  std::jthread prober_;
};

struct Acknowledgment {
  DisruptionEvent event;
  double injected_at = 0.0;   // nominal seconds from run start
  double completed_at = 0.0;  // when inject returned
};

/// Applies one disruption. Throws ServiceError if the supervisor is not
/// running.
Acknowledgment inject(const DisruptionEvent& event, Supervisor& supervisor, double injected_at = 0.0);

struct EventOutcome {
  DisruptionEvent event;
  double injected_at = 0.0;
  std::size_t failures_during = 0;
  double downtime = 0.0;
  double time_to_recovery = 0.0;
  bool recovered = true;
};

struct RecoveryReport {
  std::vector<EventOutcome> per_event;
  std::size_t total_failures = 0;
  double final_error_rate = 0.0;
  int restart_count = 0;
  int expected_restarts = 0;
  double recovery_window = 10.0;
  double run_duration = 0.0;

  bool passed() const;
};

/// Attributes every failure to the last event whose window (starting one
/// health_interval before the injection) contains it; failures before the
/// first window go to the first event. For an event with failures, the
/// recovery instant is the first success after its last failure:
/// time_to_recovery runs from injection to that instant and downtime from
/// the later of injection and the last success before the first failure.
/// final_error_rate covers the trailing recovery_window of the run.
RecoveryReport compute_recovery(std::span<const loadgen::RequestRecord> records,
                                std::span<const Acknowledgment> injections, const SupervisorParams& params,
                                double run_duration);

struct ChaosOptions {
  // Load keeps running this long after the last event; by default long
  // enough to detect, restart and confirm a recovery window.
  std::optional<double> settle;
};

struct ChaosResult {
  RecoveryReport report;
  std::vector<loadgen::RequestRecord> records;
  std::vector<Acknowledgment> injections;
  std::vector<LogEntry> supervisor_log;
  double run_duration = 0.0;
};

/// Starts a supervised server, drives `scenario` against it and injects the
/// plan, then assembles the report once load, injector and supervisor have
/// stopped. The scenario's target_url and time_scale are overridden.
ChaosResult run_chaos(std::span<const DisruptionEvent> plan, loadgen::ScenarioConfig scenario,
                      const batch::ServerConfig& server_config, const SupervisorParams& params,
                      const ChaosOptions& options = {});

// settle default: readiness_delay + failure_threshold * (health_interval +
// probe_timeout) + 2 * recovery_window.
double default_settle(const SupervisorParams& params);

}  // namespace servingbench::resilience
