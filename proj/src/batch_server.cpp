#include "servingbench/batch_server.hpp"

#include <httplib.h>

#include <cmath>
#include <json.hpp>

#include "servingbench/report.hpp"

namespace servingbench::batch {

using nlohmann::json;

namespace {

std::chrono::microseconds to_micros(double seconds) {
  return std::chrono::microseconds(static_cast<std::int64_t>(std::llround(seconds * 1e6)));
}

void respond_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

void ServerConfig::validate() const {
  policy.validate();
  if (!passthrough_url && !find_profile(profile)) {
    throw ConfigError("unknown profile '" + profile + "'; built-in profiles: " + builtin_profile_names());
  }
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (queue_capacity < 1) throw ConfigError("queue capacity must be >= 1");
  if (!(time_scale > 0.0)) throw ConfigError("time scale must be positive");
  if (jitter_sigma_ms < 0.0) throw ConfigError("jitter sigma must be >= 0");
  if (worker_threads < 2) throw ConfigError("need at least 2 worker threads");
}

PassthroughBackend::PassthroughBackend(std::string base_url, double timeout_s, double time_scale)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s), time_scale_(time_scale) {}

InferenceResult PassthroughBackend::infer(std::span<const std::string> texts) {
  const auto start = std::chrono::steady_clock::now();
  httplib::Client client(base_url_);
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);
  client.set_connection_timeout(to_micros(timeout_s_));
  client.set_read_timeout(to_micros(timeout_s_));
  client.set_write_timeout(to_micros(timeout_s_));
  InferenceResult result;
  result.predictions.reserve(texts.size());
  for (const auto& text : texts) {
    auto res = client.Post("/analyze-sentiment", json{{"text", text}}.dump(), "application/json");
    if (!res) throw ServiceError("passthrough request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ServiceError("passthrough returned HTTP " + std::to_string(res->status));
    auto body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("label") || !body["label"].is_string()) {
      throw ServiceError("passthrough response lacks a label");
    }
    Prediction p;
    p.label = body["label"].get<std::string>();
    p.score = body.value("score", 1.0);
    result.predictions.push_back(std::move(p));
  }
  result.service_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() / time_scale_;
  return result;
}

BatchServer::BatchServer(ServerConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.passthrough_url) profile_ = profile_by_name(config_.profile);
}

BatchServer::~BatchServer() {
  bool serving = false;
  {
    std::lock_guard lock(state_mu_);
    serving = state_ == State::Serving || state_ == State::Draining;
  }
  if (serving) stop_immediate();
  close_listener();
  if (listener_.joinable()) listener_.join();
}

void BatchServer::start() {
  {
    std::lock_guard lock(state_mu_);
    if (state_ != State::Created) throw ServiceError("server instance already started");
  }
  std::shared_ptr<Backend> backend;
  if (config_.passthrough_url) {
    backend = std::make_shared<PassthroughBackend>(*config_.passthrough_url, 30.0, config_.time_scale);
  } else {
    backend = std::make_shared<SyntheticBackend>(*profile_, config_.time_scale, config_.jitter_sigma_ms,
                                                 mix_seed(config_.seed, 0x6a1773));
  }

  BatcherOptions options;
  options.queue_capacity = config_.queue_capacity;
  options.time_scale = config_.time_scale;
  if (config_.trace_path) {
    trace_out_.open(*config_.trace_path, std::ios::app);
    if (!trace_out_) throw ServiceError("cannot open trace file " + *config_.trace_path);
    options.on_trace = [this](const BatchTrace& trace) {
      std::lock_guard lock(trace_mu_);
      trace_out_ << report::to_json(trace).dump() << '\n';
      trace_out_.flush();
    };
  }
  batcher_ = std::make_unique<Batcher>(config_.policy, std::move(backend), std::move(options));

  http_ = std::make_unique<httplib::Server>();
  const auto threads = static_cast<std::size_t>(config_.worker_threads);
  http_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  http_->set_keep_alive_max_count(1u << 20);
  http_->set_keep_alive_timeout(1);
  http_->set_tcp_nodelay(true);
  http_->set_socket_options([](auto sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  install_routes();

  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
    if (port_ < 0) port_ = 0;
  } else {
    port_ = http_->bind_to_port(config_.host, config_.port) ? config_.port : 0;
  }
  if (port_ == 0) {
    batcher_->abort("bind failed");
    throw ServiceError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  listener_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  std::lock_guard lock(state_mu_);
  state_ = State::Serving;
}

void BatchServer::install_routes() {
  http_->Post("/analyze-sentiment", [this](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(state_mu_);
      if (state_ != State::Serving) {
        respond_error(res, 503, "service unavailable");
        return;
      }
      ++in_handler_;
    }
    struct Exit {
      BatchServer* self;
      ~Exit() {
        {
          std::lock_guard lock(self->state_mu_);
          --self->in_handler_;
        }
        self->state_cv_.notify_all();
      }
    } exit_guard{this};

    wait_while_paused();
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
      respond_error(res, 400, "expected a JSON object with a string 'text' field");
      return;
    }
    const std::uint64_t sequence = sequence_.fetch_add(1);
    Prediction prediction;
    try {
      auto future = batcher_->submit(body["text"].get<std::string>());
      prediction = future.get();
    } catch (const QueueFullError& e) {
      respond_error(res, 503, e.what());
      return;
    } catch (const std::exception& e) {
      respond_error(res, 503, e.what());
      return;
    }
    if (config_.overhead && profile_) {
      const double ms = draw_overhead_ms(sequence) * config_.time_scale;
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    }
    wait_while_paused();
    res.status = 200;
    res.set_content(json{{"label", prediction.label}, {"score", prediction.score}}.dump(), "application/json");
    responses_sent_.fetch_add(1);
  });

  http_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    wait_while_paused();
    std::lock_guard lock(state_mu_);
    if (state_ == State::Serving) {
      res.status = 200;
      res.set_content("ok", "text/plain");
    } else {
      res.status = 503;
      res.set_content("unavailable", "text/plain");
    }
  });
}

void BatchServer::wait_while_paused() {
  std::unique_lock lock(state_mu_);
  state_cv_.wait(lock, [&] { return !paused_ || state_ == State::Stopped; });
}

double BatchServer::draw_overhead_ms(std::uint64_t sequence) const {
  const auto& model = profile_->overhead;
  Xoshiro256 rng(mix_seed(config_.seed, sequence));
  const double exp_draw = model.exp_mean_ms > 0.0 ? -std::log(1.0 - rng.uniform()) * model.exp_mean_ms : 0.0;
  return model.floor_ms + std::min(exp_draw, model.cap_ms);
}

// Closes the listening socket so the port is free at once. Worker threads
// parked on idle keep-alive connections exit within the keep-alive timeout;
// the destructor joins them.
void BatchServer::close_listener() {
  if (http_) http_->stop();
}

void BatchServer::stop_graceful() {
  {
    std::lock_guard lock(state_mu_);
    if (state_ != State::Serving) return;
    state_ = State::Draining;
    paused_ = false;
  }
  state_cv_.notify_all();
  batcher_->shutdown();
  {
    std::unique_lock lock(state_mu_);
    state_cv_.wait(lock, [&] { return in_handler_ == 0; });
    state_ = State::Stopped;
  }
  state_cv_.notify_all();
  close_listener();
}

void BatchServer::stop_immediate() {
  {
    std::lock_guard lock(state_mu_);
    if (state_ == State::Stopped || state_ == State::Created) return;
    state_ = State::Stopped;
    paused_ = false;
  }
  state_cv_.notify_all();
  batcher_->abort("instance stopped", /*fail_running=*/false);
  close_listener();
}

void BatchServer::kill() {
  {
    std::lock_guard lock(state_mu_);
    if (state_ == State::Stopped || state_ == State::Created) return;
    state_ = State::Stopped;
    paused_ = false;
  }
  state_cv_.notify_all();
  batcher_->abort("instance killed", /*fail_running=*/true);
  close_listener();
}

void BatchServer::pause() {
  {
    std::lock_guard lock(state_mu_);
    if (state_ != State::Serving) return;
    paused_ = true;
  }
  batcher_->pause();
}

void BatchServer::resume() {
  {
    std::lock_guard lock(state_mu_);
    paused_ = false;
  }
  state_cv_.notify_all();
  if (batcher_) batcher_->resume();
}

bool BatchServer::alive() const {
  std::lock_guard lock(state_mu_);
  return state_ == State::Serving;
}

bool BatchServer::paused() const {
  std::lock_guard lock(state_mu_);
  return paused_;
}

std::string BatchServer::url() const { return "http://" + config_.host + ":" + std::to_string(port_); }

}  // namespace servingbench::batch
