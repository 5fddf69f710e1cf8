#include "servingbench/loadgen.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <thread>

#include "servingbench/errors.hpp"
#include "servingbench/rng.hpp"

namespace servingbench::loadgen {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(StatusKind kind) {
  switch (kind) {
    case StatusKind::Success: return "success";
    case StatusKind::HttpError: return "http_error";
    case StatusKind::Timeout: return "timeout";
    case StatusKind::TransportError: return "transport_error";
  }
  return "unknown";
}

std::string RequestStatus::label() const {
  if (kind == StatusKind::HttpError) return "http_" + std::to_string(http_code);
  return std::string(to_string(kind));
}

RequestStatus RequestStatus::parse(std::string_view label) {
  if (label == "success") return {StatusKind::Success, 0};
  if (label == "timeout") return {StatusKind::Timeout, 0};
  if (label == "transport_error") return {StatusKind::TransportError, 0};
  if (label.starts_with("http_")) {
    return {StatusKind::HttpError, std::stoi(std::string(label.substr(5)))};
  }
  throw ConfigError("unknown request status '" + std::string(label) + "'");
}

std::string_view to_string(Mode mode) { return mode == Mode::ClosedLoop ? "closed" : "open"; }

Mode parse_mode(std::string_view text) {
  if (text == "closed") return Mode::ClosedLoop;
  if (text == "open") return Mode::OpenLoop;
  throw ConfigError("mode must be 'closed' or 'open', got '" + std::string(text) + "'");
}

std::string default_corpus_path() { return std::string(SERVINGBENCH_DATA_DIR) + "/corpus.txt"; }

void ScenarioConfig::validate() const {
  if (total_requests < 1) throw ConfigError("total_requests must be >= 1");
  if (corpus_subset_size < 1) throw ConfigError("corpus_subset_size must be >= 1");
  if (!(request_timeout > 0.0)) throw ConfigError("request timeout must be positive");
  if (users < 1) throw ConfigError("users must be >= 1");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (!(time_scale > 0.0)) throw ConfigError("time scale must be positive");
  if (target_url.empty()) throw ConfigError("target URL is empty");
}

namespace {

// Unbiased index in [0, bound) by rejection.
std::uint64_t uniform_index(Xoshiro256& rng, std::uint64_t bound) {
  const std::uint64_t limit = Xoshiro256::max() - Xoshiro256::max() % bound;
  std::uint64_t draw = 0;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

std::chrono::microseconds to_micros(double seconds) {
  return std::chrono::microseconds(static_cast<std::int64_t>(std::llround(seconds * 1e6)));
}

// Sleeps until deadline; false when stop was requested first.
bool sleep_until(Clock::time_point deadline, std::stop_token stop) {
  std::mutex mu;
  std::condition_variable_any cv;
  std::unique_lock lock(mu);
  return !cv.wait_until(lock, stop, deadline, [] { return false; }) && !stop.stop_requested();
}

class RunClock {
 public:
  RunClock(Clock::time_point origin, double time_scale) : start_(origin), scale_(time_scale) {}
  double nominal(Clock::time_point t) const { return std::chrono::duration<double>(t - start_).count() / scale_; }
  Clock::time_point at(double nominal_seconds) const {
    return start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(nominal_seconds * scale_));
  }

 private:
  Clock::time_point start_;
  double scale_;
};

void configure(httplib::Client& client, const ScenarioConfig& config, bool keep_alive) {
  const auto timeout = to_micros(config.request_timeout * config.time_scale);
  client.set_keep_alive(keep_alive);
  client.set_tcp_nodelay(true);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
}

// Sends one request and fills sent_at/completed_at/status on `record`.
void execute(httplib::Client& client, const ScenarioConfig& config, const RunClock& clock,
             const std::string& payload, RequestRecord& record, Mode mode) {
  const std::string body = json{{"text", payload}}.dump();
  const auto sent = Clock::now();
  record.sent_at = std::max(clock.nominal(sent), record.scheduled_at);
  auto res = client.Post("/analyze-sentiment", body, "application/json");
  const auto done = Clock::now();
  const double completed = std::max(clock.nominal(done), record.sent_at);
  record.completed_at = completed;

  if (!res) {
    const auto err = res.error();
    const double elapsed = std::chrono::duration<double>(done - sent).count();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= 0.95 * config.request_timeout * config.time_scale);
    record.status = {timed_out ? StatusKind::Timeout : StatusKind::TransportError, 0};
    record.error = httplib::to_string(err);
    return;
  }
  if (res->status != 200) {
    record.status = {StatusKind::HttpError, res->status};
    record.error = res->body.substr(0, 200);
    return;
  }
  auto parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("label") || !parsed["label"].is_string()) {
    record.status = {StatusKind::TransportError, 0};
    record.error = "malformed response body";
    return;
  }
  record.status = {StatusKind::Success, 0};
  record.response_time_ms = (completed - record.sent_at) * 1000.0;
  record.latency_ms = mode == Mode::OpenLoop ? (completed - record.scheduled_at) * 1000.0 : *record.response_time_ms;
}

std::vector<RequestRecord> collect(std::vector<std::optional<RequestRecord>>& slots) {
  std::vector<RequestRecord> out;
  out.reserve(slots.size());
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  std::stable_sort(out.begin(), out.end(), [](const RequestRecord& a, const RequestRecord& b) {
    return a.sent_at != b.sent_at ? a.sent_at < b.sent_at : a.index < b.index;
  });
  return out;
}

std::vector<RequestRecord> run_closed_loop(const ScenarioConfig& config, std::span<const std::string> payloads,
                                           std::span<const double> gaps, std::stop_token stop,
                                           Clock::time_point origin) {
  const std::size_t n = config.total_requests;
  std::vector<std::optional<RequestRecord>> slots(n);
  const RunClock clock(origin, config.time_scale);

  auto user_loop = [&](std::size_t user) {
    httplib::Client client(config.target_url);
    configure(client, config, /*keep_alive=*/true);
    double last_done = 0.0;
    for (std::size_t k = user; k < n; k += config.users) {
      const double intended = last_done + gaps[k];
      if (!sleep_until(clock.at(intended), stop)) return;
      RequestRecord record;
      record.index = k;
      record.payload_id = k % payloads.size();
      record.scheduled_at = intended;
      execute(client, config, clock, payloads[record.payload_id], record, Mode::ClosedLoop);
      last_done = *record.completed_at;
      slots[k] = std::move(record);
    }
  };

  if (config.users == 1) {
    user_loop(0);
  } else {
    std::vector<std::jthread> users;
    users.reserve(config.users);
    for (std::size_t u = 0; u < config.users; ++u) users.emplace_back(user_loop, u);
  }
  return collect(slots);
}

std::vector<RequestRecord> run_open_loop(const ScenarioConfig& config, std::span<const std::string> payloads,
                                         std::span<const double> gaps, std::stop_token stop,
                                         Clock::time_point origin) {
  const std::size_t n = config.total_requests;
  std::vector<std::optional<RequestRecord>> slots(n);
  const RunClock clock(origin, config.time_scale);

  std::mutex mu;
  std::condition_variable cv;
  std::size_t in_flight = 0;

  double scheduled = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    scheduled += gaps[k];
    if (!sleep_until(clock.at(scheduled), stop)) break;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return in_flight < config.max_in_flight; });
      ++in_flight;
    }
    RequestRecord record;
    record.index = k;
    record.payload_id = k % payloads.size();
    record.scheduled_at = scheduled;
    std::thread([&, record = std::move(record)]() mutable {
      httplib::Client client(config.target_url);
      configure(client, config, /*keep_alive=*/false);
      execute(client, config, clock, payloads[record.payload_id], record, Mode::OpenLoop);
      const std::size_t slot = record.index;
      std::lock_guard lock(mu);
      slots[slot] = std::move(record);
      --in_flight;
      cv.notify_all();
    }).detach();
  }
  std::unique_lock lock(mu);
  cv.wait(lock, [&] { return in_flight == 0; });
  return collect(slots);
}

}  // namespace

std::vector<std::string> load_corpus(const std::filesystem::path& path, std::size_t subset_size,
                                     std::uint64_t corpus_seed) {
  if (subset_size < 1) throw ConfigError("corpus subset size must be >= 1");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '{') {
      auto record = json::parse(line, nullptr, false);
      if (!record.is_discarded() && record.is_object() && record.contains("text") && record["text"].is_string()) {
        lines.push_back(record["text"].get<std::string>());
        continue;
      }
    }
    lines.push_back(std::move(line));
  }
  if (lines.size() < subset_size) {
    throw InsufficientDataError("corpus " + path.string() + " has " + std::to_string(lines.size()) +
                                " texts, need " + std::to_string(subset_size));
  }
  Xoshiro256 rng(corpus_seed);
  for (std::size_t i = lines.size() - 1; i > 0; --i) {
    std::swap(lines[i], lines[uniform_index(rng, i + 1)]);
  }
  lines.resize(subset_size);
  return lines;
}

std::vector<double> replay_gaps(const ScenarioConfig& config) {
  return arrivals::sample(config.process, config.seed, config.total_requests);
}

std::vector<RequestRecord> run_scenario(const ScenarioConfig& config, std::stop_token stop) {
  config.validate();
  const auto payloads = load_corpus(config.corpus_path, config.corpus_subset_size, config.corpus_seed);
  return run_scenario(config, payloads, stop);
}

std::vector<RequestRecord> run_scenario(const ScenarioConfig& config, std::span<const std::string> payloads,
                                        std::stop_token stop) {
  return run_scenario(config, payloads, stop, Clock::now());
}

std::vector<RequestRecord> run_scenario(const ScenarioConfig& config, std::span<const std::string> payloads,
                                        std::stop_token stop, std::chrono::steady_clock::time_point origin) {
  config.validate();
  if (payloads.empty()) throw ConfigError("payload list is empty");
  const auto gaps = replay_gaps(config);
  return config.mode == Mode::ClosedLoop ? run_closed_loop(config, payloads, gaps, stop, origin)
                                         : run_open_loop(config, payloads, gaps, stop, origin);
}

}  // namespace servingbench::loadgen
