#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace servingbench::loadgen {

enum class StatusKind { Success, HttpError, Timeout, TransportError };

std::string_view to_string(StatusKind kind);

struct RequestStatus {
  StatusKind kind = StatusKind::Success;
  int http_code = 0;  // meaningful for HttpError only

  bool ok() const { return kind == StatusKind::Success; }
  // "success", "http_503", "timeout", "transport_error"
  std::string label() const;
  static RequestStatus parse(std::string_view label);

  bool operator==(const RequestStatus&) const = default;
};

/// Timeline of one request. Times are seconds from run start on the
/// monotonic clock, expressed in nominal (uncompressed) units.
struct RequestRecord {
  std::size_t index = 0;
  double scheduled_at = 0.0;
  double sent_at = 0.0;
  // Time the outcome became known: completion for successes, detection for
  // failures.
  std::optional<double> completed_at;
  RequestStatus status;
  // (completed_at - sent_at) * 1000, successes only.
  std::optional<double> response_time_ms;
  // Latency charged against the schedule: from scheduled_at in open-loop
  // runs (coordinated-omission safe), from sent_at in closed-loop runs.
  std::optional<double> latency_ms;
  std::size_t payload_id = 0;
  std::string error;

  bool operator==(const RequestRecord&) const = default;
};

}  // namespace servingbench::loadgen
