#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "servingbench/record.hpp"

namespace servingbench::metrics {

/// Nearest-rank percentile: the sorted value at index ceil(q * n) - 1.
/// Requires a non-empty list and 0 < q <= 1.
double percentile(std::span<const double> values, double q);

/// Run summary in the units of the load-test tables: latencies in ms,
/// duration in s. Latency fields are empty when no request succeeded.
struct LatencySummary {
  std::optional<double> p50, p95, p99;
  std::optional<double> min, avg, max;
  double rps = 0.0;
  double failure_rate = 0.0;
  std::size_t total = 0;
  std::size_t failures = 0;
  double duration = 0.0;
};

// Percentiles use RequestRecord::latency_ms, min/avg/max use
// response_time_ms; both over successful records only.
LatencySummary summarize(std::span<const loadgen::RequestRecord> records);

struct TimeSeriesPoint {
  double window_start = 0.0;
  double rps = 0.0;
  double error_rate = 0.0;
  std::optional<double> avg_response_ms;
  std::size_t completions = 0;
  std::size_t failures = 0;
};

/// Fixed-width windows from 0 to the last outcome; successes bucketed by
/// completion time, failures by detection time.
std::vector<TimeSeriesPoint> timeseries(std::span<const loadgen::RequestRecord> records, double window);

// CSV columns:
// index,scheduled_at,sent_at,completed_at,status,response_time_ms,payload_id,latency_ms
void write_records_csv(std::ostream& out, std::span<const loadgen::RequestRecord> records);
std::vector<loadgen::RequestRecord> read_records_csv(std::istream& in);

}  // namespace servingbench::metrics
