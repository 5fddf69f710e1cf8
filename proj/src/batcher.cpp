#include "servingbench/batcher.hpp"

#include <algorithm>
#include <cmath>

namespace servingbench::batch {

void BatchPolicy::validate() const {
  if (max_batch_size < 1 || max_batch_size > kMaxBatchSize) {
    throw ConfigError("max batch size must be in [1, 1024]");
  }
  if (!(window_floor_ms >= 0.0)) throw ConfigError("window floor must be >= 0");
  if (!(window_floor_ms <= max_batch_window_ms && max_batch_window_ms <= window_ceiling_ms)) {
    throw ConfigError("batch window must satisfy floor <= window <= ceiling");
  }
}

BatchPolicy BatchPolicy::unbatched() {
  BatchPolicy p;
  p.max_batch_size = 1;
  p.max_batch_window_ms = 0.0;
  p.adaptive = false;
  p.window_floor_ms = 0.0;
  p.window_ceiling_ms = 0.0;
  return p;
}

double adapt_window(std::span<const double> recent_arrival_gaps_ms, const BatchPolicy& policy,
                    double current_window_ms) {
  if (!policy.adaptive) return policy.max_batch_window_ms;
  if (recent_arrival_gaps_ms.empty()) return current_window_ms;
  double ewma = recent_arrival_gaps_ms.front();
  for (double gap : recent_arrival_gaps_ms.subspan(1)) {
    ewma = kEwmaDecay * gap + (1.0 - kEwmaDecay) * ewma;
  }
  return std::clamp(ewma * kWindowGain, policy.window_floor_ms, policy.window_ceiling_ms);
}

std::string_view to_string(Trigger trigger) {
  switch (trigger) {
    case Trigger::SizeFull: return "size_full";
    case Trigger::WindowExpired: return "window_expired";
    case Trigger::Shutdown: return "shutdown";
  }
  return "unknown";
}

SyntheticBackend::SyntheticBackend(BackendProfile profile, double time_scale, double jitter_sigma_ms,
                                   std::uint64_t seed)
    : profile_(std::move(profile)), time_scale_(time_scale), jitter_sigma_ms_(jitter_sigma_ms), rng_(seed) {}

double SyntheticBackend::nominal_service_ms(int batch_size) const {
  return profile_latency(profile_, batch_size) * batch_size;
}

InferenceResult SyntheticBackend::infer(std::span<const std::string> texts) {
  const auto start = std::chrono::steady_clock::now();
  const int b = static_cast<int>(texts.size());
  double service_ms = nominal_service_ms(b);
  if (jitter_sigma_ms_ > 0.0) service_ms = std::max(0.0, service_ms + jitter_sigma_ms_ * rng_.normal());
  const auto busy = std::chrono::duration<double, std::milli>(service_ms * time_scale_);
  std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(busy));
  return {predict(texts), service_ms};
}

Batcher::Batcher(BatchPolicy policy, std::shared_ptr<Backend> backend, BatcherOptions options)
    : policy_(policy),
      backend_(std::move(backend)),
      options_(std::move(options)),
      start_(Clock::now()),
      window_ms_(policy.max_batch_window_ms) {
  policy_.validate();
  if (!backend_) throw ConfigError("batcher needs a backend");
  if (!(options_.time_scale > 0.0)) throw ConfigError("time scale must be positive");
  dispatcher_ = std::thread([this] { run(); });
}

Batcher::~Batcher() {
  shutdown();
  if (dispatcher_.joinable()) dispatcher_.join();
}

Batcher::Clock::duration Batcher::scaled_ms(double ms) const {
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(ms * options_.time_scale));
}

std::future<Prediction> Batcher::submit(std::string text) {
  std::unique_lock lock(mu_);
  if (stopping_) throw ServiceError(aborted_ ? abort_reason_ : "batcher is shutting down");
  if (queue_.size() >= options_.queue_capacity) throw QueueFullError("request queue is full");
  const auto now = Clock::now();
  if (last_arrival_) {
    const double gap = std::chrono::duration<double, std::milli>(now - *last_arrival_).count() / options_.time_scale;
    gaps_ms_.push_back(gap);
    if (gaps_ms_.size() > kGapHistory) gaps_ms_.pop_front();
  }
  last_arrival_ = now;
  Pending pending{std::move(text), {}, now};
  auto future = pending.promise.get_future();
  queue_.push_back(std::move(pending));
  ++accepted_;
  lock.unlock();
  cv_.notify_all();
  return future;
}

void Batcher::pause() {
  std::lock_guard lock(mu_);
  paused_ = true;
}

void Batcher::resume() {
  {
    std::lock_guard lock(mu_);
    paused_ = false;
  }
  cv_.notify_all();
}

void Batcher::shutdown() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    paused_ = false;
  }
  cv_.notify_all();
  if (dispatcher_.joinable() && dispatcher_.get_id() != std::this_thread::get_id()) dispatcher_.join();
}

void Batcher::abort(const std::string& reason, bool fail_running) {
  std::deque<Pending> dropped;
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    aborted_ = true;
    fail_running_ = fail_running;
    paused_ = false;
    abort_reason_ = reason;
    dropped.swap(queue_);
  }
  cv_.notify_all();
  for (auto& p : dropped) p.promise.set_exception(std::make_exception_ptr(ServiceError(reason)));
  if (dispatcher_.joinable() && dispatcher_.get_id() != std::this_thread::get_id()) dispatcher_.join();
}

void Batcher::run() {
  const auto max_size = static_cast<std::size_t>(policy_.max_batch_size);
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return stopping_ || (!queue_.empty() && !paused_); });
    if (queue_.empty()) {
      if (stopping_) return;
      continue;
    }

    Trigger trigger = Trigger::SizeFull;
    if (queue_.size() < max_size) {
      if (stopping_) {
        trigger = Trigger::Shutdown;
      } else {
        const auto deadline = queue_.front().enqueued + scaled_ms(window_ms_);
        const bool woke = cv_.wait_until(lock, deadline, [&] {
          return queue_.size() >= max_size || stopping_ || paused_;
        });
        if (paused_ || queue_.empty()) continue;
        if (!woke) {
          trigger = Trigger::WindowExpired;
        } else if (queue_.size() >= max_size) {
          trigger = Trigger::SizeFull;
        } else {
          trigger = Trigger::Shutdown;
        }
      }
    }

    const std::size_t take = std::min(queue_.size(), max_size);
    std::vector<Pending> batch;
    batch.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      batch.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    const auto dispatched = Clock::now();
    BatchTrace trace;
    trace.dispatched_at = std::chrono::duration<double>(dispatched - start_).count() / options_.time_scale;
    trace.batch_size = static_cast<int>(take);
    trace.wait_of_oldest_ms =
        std::chrono::duration<double, std::milli>(dispatched - batch.front().enqueued).count() / options_.time_scale;
    trace.trigger = trigger;
    trace.window_ms = window_ms_;
    lock.unlock();

    std::vector<std::string> texts;
    texts.reserve(take);
    for (auto& p : batch) texts.push_back(std::move(p.text));
    InferenceResult result;
    std::exception_ptr failure;
    try {
      result = backend_->infer(texts);
      if (result.predictions.size() != take) throw ServiceError("backend returned a wrong result count");
    } catch (...) {
      failure = std::current_exception();
    }
    trace.service_time_ms = result.service_time_ms;

    lock.lock();
    // A suspended runtime holds finished work until resumed.
    cv_.wait(lock, [&] { return !paused_ || stopping_; });
    if (aborted_ && fail_running_ && !failure) failure = std::make_exception_ptr(ServiceError(abort_reason_));
    traces_.push_back(trace);
    window_ms_ = adapt_window(std::vector<double>(gaps_ms_.begin(), gaps_ms_.end()), policy_, window_ms_);
    completed_ += take;
    lock.unlock();

    for (std::size_t i = 0; i < take; ++i) {
      if (failure) {
        batch[i].promise.set_exception(failure);
      } else {
        batch[i].promise.set_value(std::move(result.predictions[i]));
      }
    }
    if (options_.on_trace) options_.on_trace(trace);
    lock.lock();
  }
}

std::vector<BatchTrace> Batcher::traces() const {
  std::lock_guard lock(mu_);
  return traces_;
}

double Batcher::current_window_ms() const {
  std::lock_guard lock(mu_);
  return window_ms_;
}

std::size_t Batcher::queue_depth() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

std::uint64_t Batcher::accepted() const {
  std::lock_guard lock(mu_);
  return accepted_;
}

std::uint64_t Batcher::completed() const {
  std::lock_guard lock(mu_);
  return completed_;
}

}  // namespace servingbench::batch
