#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "servingbench/arrivals.hpp"
#include "servingbench/record.hpp"

namespace servingbench::loadgen {

enum class Mode { ClosedLoop, OpenLoop };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

std::string default_corpus_path();

/// One load-test scenario. Durations are nominal seconds; time_scale
/// compresses every wait and timeout on the wire (0.01 runs 100x faster) while
/// records stay in nominal units.
struct ScenarioConfig {
  std::string name = "steady";
  arrivals::ArrivalProcess process = arrivals::make_exponential(0.5);
  Mode mode = Mode::ClosedLoop;
  std::size_t total_requests = 900;
  std::uint64_t seed = 42;
  std::string target_url = "http://127.0.0.1:3000";
  std::string corpus_path = default_corpus_path();
  std::size_t corpus_subset_size = 1000;
  std::uint64_t corpus_seed = 42;
  double request_timeout = 30.0;
  std::size_t users = 1;            // closed loop: concurrent logical users
  std::size_t max_in_flight = 1024; // open loop
  double time_scale = 1.0;

  void validate() const;
};

/// Reads one payload per line (UTF-8), or the `text` field of JSON-lines
/// records, and returns a deterministic shuffled subset of exactly
/// subset_size entries.
std::vector<std::string> load_corpus(const std::filesystem::path& path, std::size_t subset_size,
                                     std::uint64_t corpus_seed);

/// The exact gap sequence run_scenario consumes: gap k precedes request k.
std::vector<double> replay_gaps(const ScenarioConfig& config);

/// Drives the target and returns one record per issued request, in send
/// order. Without a stop request exactly total_requests records come back.
///
/// ClosedLoop: each user waits gap k after its previous completion, then
/// sends request k (user u owns requests u, u + users, ...). OpenLoop:
/// request k is scheduled at the cumulative sum of gaps 0..k regardless of
/// completions; any send lag stays visible as sent_at - scheduled_at.
std::vector<RequestRecord> run_scenario(const ScenarioConfig& config, std::stop_token stop = {});
std::vector<RequestRecord> run_scenario(const ScenarioConfig& config, std::span<const std::string> payloads,
                                        std::stop_token stop = {});
// Same, with record times measured from `origin` instead of the call time.
std::vector<RequestRecord> run_scenario(const ScenarioConfig& config, std::span<const std::string> payloads,
                                        std::stop_token stop, std::chrono::steady_clock::time_point origin);

}  // namespace servingbench::loadgen
