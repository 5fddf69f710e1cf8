#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "servingbench/batcher.hpp"

namespace httplib {
class Server;
}

namespace servingbench::batch {

struct ServerConfig {
  std::string profile = "fp16-onnx";
  std::optional<std::string> passthrough_url;  // replaces the synthetic backend
  BatchPolicy policy;
  std::string host = "127.0.0.1";
  int port = 3000;  // 0 picks a free port
  std::size_t queue_capacity = 10000;
  bool overhead = true;  // profile's calibrated per-request handling cost
  double jitter_sigma_ms = 0.0;
  double time_scale = 1.0;
  std::uint64_t seed = 42;
  std::optional<std::string> trace_path;  // BatchTrace JSON lines
  int worker_threads = 160;

  void validate() const;
};

/// Forwards every text of a batch to an external `/analyze-sentiment`.
class PassthroughBackend final : public Backend {
 public:
  PassthroughBackend(std::string base_url, double timeout_s, double time_scale = 1.0);
  InferenceResult infer(std::span<const std::string> texts) override;
  std::string name() const override { return "passthrough:" + base_url_; }

 private:
  std::string base_url_;
  double timeout_s_;
  double time_scale_;
};

/// Embedded inference service: POST /analyze-sentiment and GET /healthz on
/// top of a Batcher.
///
/// The three stop modes mirror how an instance can go away: stop_graceful()
/// drains the queue before closing, stop_immediate() closes and fails queued
/// requests while the running batch finishes, kill() also fails the running
/// batch. pause()/resume() freeze all request processing without dropping
/// anything.
class BatchServer {
 public:
  explicit BatchServer(ServerConfig config);
  ~BatchServer();

  BatchServer(const BatchServer&) = delete;
  BatchServer& operator=(const BatchServer&) = delete;

  // Binds and starts serving; throws ServiceError when the bind fails.
  void start();

  void stop_graceful();
  void stop_immediate();
  void kill();
  void pause();
  void resume();

  bool alive() const;
  bool paused() const;
  int port() const { return port_; }
  std::string url() const;
  const ServerConfig& config() const { return config_; }
  const Batcher& batcher() const { return *batcher_; }
  std::vector<BatchTrace> traces() const { return batcher_->traces(); }
  std::uint64_t responses_sent() const { return responses_sent_.load(); }

 private:
  enum class State { Created, Serving, Draining, Stopped };

  void install_routes();
  void wait_while_paused();
  double draw_overhead_ms(std::uint64_t sequence) const;
  void close_listener();

  ServerConfig config_;
  std::optional<BackendProfile> profile_;
  std::unique_ptr<httplib::Server> http_;
  std::unique_ptr<Batcher> batcher_;
  std::thread listener_;
  int port_ = 0;

  mutable std::mutex state_mu_;
  std::condition_variable state_cv_;
  State state_ = State::Created;
  bool paused_ = false;
  std::size_t in_handler_ = 0;

  std::atomic<std::uint64_t> sequence_{0};
  std::atomic<std::uint64_t> responses_sent_{0};

  std::mutex trace_mu_;
  std::ofstream trace_out_;
};

}  // namespace servingbench::batch
