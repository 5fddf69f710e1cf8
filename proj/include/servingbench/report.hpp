#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "servingbench/arrivals.hpp"
#include "servingbench/batch_server.hpp"
#include "servingbench/batcher.hpp"
#include "servingbench/loadgen.hpp"
#include "servingbench/metrics.hpp"
#include "servingbench/resilience.hpp"
#include "servingbench/statval.hpp"

// JSON shapes of everything the toolkit writes. Durations and instants are
// seconds, latencies and windows milliseconds; field names carry the unit.
namespace servingbench::report {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

std::string toolkit_version();

json to_json(const batch::BatchTrace& trace);
json to_json(const batch::BatchPolicy& policy);
json to_json(const batch::ServerConfig& config);
json to_json(const arrivals::ArrivalProcess& process);
json to_json(const arrivals::SampleStats& stats);
json to_json(const statval::DensityCurve& curve);
json to_json(const statval::FitReport& fit);
json to_json(const statval::FitVerdict& verdict);
json to_json(const metrics::LatencySummary& summary);
json to_json(const metrics::TimeSeriesPoint& point);
json to_json(std::span<const metrics::TimeSeriesPoint> series);
json to_json(const loadgen::ScenarioConfig& config);
json to_json(const resilience::DisruptionEvent& event);
json to_json(std::span<const resilience::DisruptionEvent> plan);
json to_json(const resilience::SupervisorParams& params);
json to_json(const resilience::RecoveryReport& report);

// Inverses for the configuration types echoed into reports. Missing fields
// keep their defaults; wrong types throw ConfigError.
batch::BatchPolicy policy_from_json(const json& j);
batch::ServerConfig server_config_from_json(const json& j);
arrivals::ArrivalProcess process_from_json(const json& j);
loadgen::ScenarioConfig scenario_from_json(const json& j);
resilience::DisruptionEvent event_from_json(const json& j);
std::vector<resilience::DisruptionEvent> plan_from_json(const json& j);
resilience::SupervisorParams params_from_json(const json& j);

/// Envelope written as report.json by every command.
struct RunReport {
  std::string command;
  json config_echo = json::object();
  std::optional<statval::FitReport> fit;
  std::optional<statval::FitVerdict> verdict;
  std::optional<metrics::LatencySummary> summary;
  std::vector<metrics::TimeSeriesPoint> timeseries;
  std::optional<resilience::RecoveryReport> recovery;
  std::optional<std::string> batch_traces_path;
  std::optional<std::string> gaps_digest;
  std::optional<std::string> payload_digest;
};

json to_json(const RunReport& report);
void write_json(const std::filesystem::path& path, const json& doc);
// Throws ConfigError on unreadable files or a schema_version mismatch.
json read_report(const std::filesystem::path& path);

// FNV-1a 64 over the IEEE-754 bit patterns, as 16 hex digits.
std::string digest(std::span<const double> values);
std::string digest(std::span<const std::string> texts);

}  // namespace servingbench::report
