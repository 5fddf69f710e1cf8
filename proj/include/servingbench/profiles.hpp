#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace servingbench::batch {

inline constexpr std::array<int, 6> kCalibratedBatchSizes = {1, 2, 4, 8, 16, 32};
inline constexpr int kMaxBatchSize = 1024;

/// Per-request handling cost outside the model lane (HTTP framing,
/// tokenization, serialization). Drawn as floor + min(Exp(mean), cap) ms.
///
/// Calibrated per profile from the scenario-1 load-test tables: the
/// exponential mean from (p95 - p50) / ln 10, the floor so that the median
/// matches p50, and the cap so that the worst case matches the observed max.
/// The calibration assumes the reference deployment: a 10 ms batch window for
/// the optimized profiles and unbatched serving for the baseline.
struct OverheadModel {
  double floor_ms = 0.0;
  double exp_mean_ms = 0.0;
  double cap_ms = 0.0;

  double mean_ms() const;
};

enum class LabelMode { Deterministic };

/// Synthetic model backend: per-sample latency L(b) at the six calibrated
/// batch sizes, plus the published throughput row it was measured with.
struct BackendProfile {
  std::string name;          // CLI name, e.g. "fp16-onnx"
  std::string display_name;  // table row, e.g. "Opt. (FP16 ONNX)"
  std::array<double, 6> per_sample_latency_ms{};
  std::array<double, 6> published_throughput{};
  OverheadModel overhead;
  LabelMode label_mode = LabelMode::Deterministic;
};

std::span<const BackendProfile> builtin_profiles();
std::optional<BackendProfile> find_profile(std::string_view name);
// Throws ConfigError listing the built-in names.
const BackendProfile& profile_by_name(std::string_view name);
std::string builtin_profile_names();

/// L(b) in ms per sample. Exact at calibrated sizes, log-log interpolation
/// between them, clamped to L(32) above 32.
double profile_latency(const BackendProfile& profile, int batch_size);

/// 1000 / L(b), samples per second.
double profile_throughput(const BackendProfile& profile, int batch_size);

struct Prediction {
  std::string label;
  double score = 1.0;

  bool operator==(const Prediction&) const = default;
};

inline constexpr std::array<std::string_view, 3> kLabels = {"negative", "neutral", "positive"};

// FNV-1a 64; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

/// Deterministic stand-in for the sentiment model: one label per text, chosen
/// by a stable hash, in input order.
std::vector<Prediction> predict(std::span<const std::string> texts);

}  // namespace servingbench::batch
