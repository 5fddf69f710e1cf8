#include "servingbench/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "servingbench/errors.hpp"

namespace servingbench::metrics {

namespace {

// Slack for q * n landing a hair above an integer (0.95 * 100 and friends).
constexpr double kRankSlack = 1e-9;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, end) : std::to_string(v);
}

std::optional<double> parse_optional_double(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ConfigError("bad numeric CSV field '" + field + "'");
  }
  return v;
}

double outcome_time(const loadgen::RequestRecord& r) { return r.completed_at.value_or(r.sent_at); }

}  // namespace

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw InsufficientDataError("percentile of an empty list");
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("percentile fraction must be in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - kRankSlack));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencySummary summarize(std::span<const loadgen::RequestRecord> records) {
  if (records.empty()) throw InsufficientDataError("summary of an empty run");
  LatencySummary s;
  s.total = records.size();

  std::vector<double> latencies;
  std::vector<double> responses;
  double first_send = records.front().sent_at;
  double last_outcome = outcome_time(records.front());
  for (const auto& r : records) {
    first_send = std::min(first_send, r.sent_at);
    last_outcome = std::max(last_outcome, outcome_time(r));
    if (!r.status.ok()) {
      ++s.failures;
      continue;
    }
    if (r.latency_ms) latencies.push_back(*r.latency_ms);
    if (r.response_time_ms) responses.push_back(*r.response_time_ms);
  }
  s.failure_rate = static_cast<double>(s.failures) / static_cast<double>(s.total);
  s.duration = last_outcome - first_send;
  s.rps = s.duration > 0.0 ? static_cast<double>(s.total) / s.duration : 0.0;

  if (!latencies.empty()) {
    s.p50 = percentile(latencies, 0.50);
    s.p95 = percentile(latencies, 0.95);
    s.p99 = percentile(latencies, 0.99);
  }
  if (!responses.empty()) {
    // Sorting first makes the sum independent of record order.
    std::sort(responses.begin(), responses.end());
    s.min = responses.front();
    s.max = responses.back();
    s.avg = std::accumulate(responses.begin(), responses.end(), 0.0) / static_cast<double>(responses.size());
  }
  return s;
}

std::vector<TimeSeriesPoint> timeseries(std::span<const loadgen::RequestRecord> records, double window) {
  if (!(window > 0.0)) throw ParameterError("timeseries window must be positive");
  if (records.empty()) return {};
  double end = 0.0;
  for (const auto& r : records) end = std::max(end, outcome_time(r));
  const auto count = static_cast<std::size_t>(std::floor(end / window)) + 1;

  std::vector<TimeSeriesPoint> points(count);
  std::vector<double> response_sum(count, 0.0);
  std::vector<std::size_t> response_count(count, 0);
  for (std::size_t i = 0; i < count; ++i) points[i].window_start = window * static_cast<double>(i);
  for (const auto& r : records) {
    const double t = std::max(0.0, outcome_time(r));
    const auto idx = std::min(static_cast<std::size_t>(std::floor(t / window)), count - 1);
    if (r.status.ok()) {
      points[idx].completions++;
      if (r.response_time_ms) {
        response_sum[idx] += *r.response_time_ms;
        response_count[idx]++;
      }
    } else {
      points[idx].failures++;
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    points[i].rps = static_cast<double>(points[i].completions) / window;
    points[i].error_rate = static_cast<double>(points[i].failures) / window;
    if (response_count[i] > 0) {
      points[i].avg_response_ms = response_sum[i] / static_cast<double>(response_count[i]);
    }
  }
  return points;
}

void write_records_csv(std::ostream& out, std::span<const loadgen::RequestRecord> records) {
  out << "index,scheduled_at,sent_at,completed_at,status,response_time_ms,payload_id,latency_ms\n";
  for (const auto& r : records) {
    out << r.index << ',' << format_double(r.scheduled_at) << ',' << format_double(r.sent_at) << ','
        << (r.completed_at ? format_double(*r.completed_at) : "") << ',' << r.status.label() << ','
        << (r.response_time_ms ? format_double(*r.response_time_ms) : "") << ',' << r.payload_id << ','
        << (r.latency_ms ? format_double(*r.latency_ms) : "") << '\n';
  }
}

std::vector<loadgen::RequestRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InsufficientDataError("empty records CSV");
  std::vector<loadgen::RequestRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 8) throw ConfigError("records CSV row needs 8 columns: " + line);
    loadgen::RequestRecord r;
    r.index = std::stoul(fields[0]);
    r.scheduled_at = parse_optional_double(fields[1]).value_or(0.0);
    r.sent_at = parse_optional_double(fields[2]).value_or(0.0);
    r.completed_at = parse_optional_double(fields[3]);
    r.status = loadgen::RequestStatus::parse(fields[4]);
    r.response_time_ms = parse_optional_double(fields[5]);
    r.payload_id = std::stoul(fields[6]);
    r.latency_ms = parse_optional_double(fields[7]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace servingbench::metrics
