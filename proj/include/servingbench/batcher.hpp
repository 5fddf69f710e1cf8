#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "servingbench/errors.hpp"
#include "servingbench/profiles.hpp"
#include "servingbench/rng.hpp"

namespace servingbench::batch {

/// Adaptive-batching parameters. Windows are in nominal milliseconds.
struct BatchPolicy {
  int max_batch_size = 32;
  double max_batch_window_ms = 10.0;
  bool adaptive = true;
  double window_floor_ms = 1.0;
  double window_ceiling_ms = 10.0;

  void validate() const;
  // Batching disabled: size 1, window never applies.
  static BatchPolicy unbatched();

  bool operator==(const BatchPolicy&) const = default;
};

/// New window after a dispatch: clamp(EWMA(gaps, decay 0.2) * 0.5, floor,
/// ceiling). Non-adaptive policies always return max_batch_window_ms; an
/// empty history keeps current_window_ms.
double adapt_window(std::span<const double> recent_arrival_gaps_ms, const BatchPolicy& policy,
                    double current_window_ms);

inline constexpr double kEwmaDecay = 0.2;
inline constexpr double kWindowGain = 0.5;
inline constexpr std::size_t kGapHistory = 32;

enum class Trigger { SizeFull, WindowExpired, Shutdown };
std::string_view to_string(Trigger trigger);

struct BatchTrace {
  double dispatched_at = 0.0;  // s since batcher start, nominal
  int batch_size = 0;
  double wait_of_oldest_ms = 0.0;
  double service_time_ms = 0.0;
  Trigger trigger = Trigger::SizeFull;
  double window_ms = 0.0;  // window in force when the batch formed
};

struct InferenceResult {
  std::vector<Prediction> predictions;
  double service_time_ms = 0.0;  // nominal
};

/// Model behind the lane. Called only from the dispatcher thread.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual InferenceResult infer(std::span<const std::string> texts) = 0;
  virtual std::string name() const = 0;
};

/// Occupies the lane for L(b) * b ms (scaled by time_scale), optionally with
/// Gaussian jitter, and labels texts with predict().
class SyntheticBackend final : public Backend {
 public:
  explicit SyntheticBackend(BackendProfile profile, double time_scale = 1.0, double jitter_sigma_ms = 0.0,
                            std::uint64_t seed = 0);

  InferenceResult infer(std::span<const std::string> texts) override;
  std::string name() const override { return profile_.name; }

  const BackendProfile& profile() const { return profile_; }
  double nominal_service_ms(int batch_size) const;

 private:
  BackendProfile profile_;
  double time_scale_;
  double jitter_sigma_ms_;
  Xoshiro256 rng_;
};

class QueueFullError : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

struct BatcherOptions {
  std::size_t queue_capacity = 10000;
  double time_scale = 1.0;
  std::function<void(const BatchTrace&)> on_trace;
};

/// Request queue plus a single dispatcher agent driving one model lane.
///
/// A batch forms when the queue holds max_batch_size requests (SizeFull) or
/// the oldest request has waited the current window (WindowExpired).
/// shutdown() flushes the queue (Shutdown); abort() fails every queued
/// request and, by default, the batch currently on the lane.
class Batcher {
 public:
  Batcher(BatchPolicy policy, std::shared_ptr<Backend> backend, BatcherOptions options = {});
  ~Batcher();

  Batcher(const Batcher&) = delete;
  Batcher& operator=(const Batcher&) = delete;

  // Throws QueueFullError when the queue is at capacity, ServiceError once
  // stopped.
  std::future<Prediction> submit(std::string text);

  void pause();
  void resume();
  void shutdown();
  // fail_running = false lets the batch on the lane finish normally.
  void abort(const std::string& reason, bool fail_running = true);

  std::vector<BatchTrace> traces() const;
  double current_window_ms() const;
  std::size_t queue_depth() const;
  std::uint64_t accepted() const;
  std::uint64_t completed() const;
  const BatchPolicy& policy() const { return policy_; }

 private:
  using Clock = std::chrono::steady_clock;

  struct Pending {
    std::string text;
    std::promise<Prediction> promise;
    Clock::time_point enqueued;
  };

  void run();
  Clock::duration scaled_ms(double ms) const;

  BatchPolicy policy_;
  std::shared_ptr<Backend> backend_;
  BatcherOptions options_;
  Clock::time_point start_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Pending> queue_;
  std::deque<double> gaps_ms_;
  std::vector<BatchTrace> traces_;
  std::optional<Clock::time_point> last_arrival_;
  double window_ms_;
  bool paused_ = false;
  bool stopping_ = false;
  bool aborted_ = false;
  bool fail_running_ = true;
  std::string abort_reason_;
  std::uint64_t accepted_ = 0;
  std::uint64_t completed_ = 0;

  std::thread dispatcher_;
};

}  // namespace servingbench::batch
