#include "servingbench/profiles.hpp"

#include <cmath>

#include "servingbench/errors.hpp"

namespace servingbench::batch {

namespace {

const std::array<BackendProfile, 6> kProfiles = {{
    {"base-fp32", "Base (FP32 PyTorch)",
     {2177.49, 1197.24, 727.27, 500.12, 266.99, 135.72},
     {0.46, 0.84, 1.38, 2, 3.75, 7.37},
     {101.07, 608.01, 2009.14}},
    {"fp32-pytorch", "Opt. (FP32 PyTorch)",
     {6.38, 3.40, 2.61, 2.41, 2.22, 2.09},
     {156.85, 293.81, 383.77, 415.52, 450.09, 478.01},
     {25.10, 6.51, 305.12}},
    {"fp16-pytorch", "Opt. (FP16 PyTorch)",
     {6.22, 3.03, 1.53, 0.79, 0.6, 0.56},
     {160.71, 329.66, 652.07, 1263.23, 1666.86, 1774.72},
     {26.47, 4.78, 187.31}},
    {"fp32-onnx", "Opt. (FP32 ONNX)",
     {4.09, 2.97, 2.69, 2.48, 2.49, 2.43},
     {244.51, 336.54, 372.01, 403.7, 402.05, 412.14},
     {10.20, 3.91, 189.49}},
    {"opt-onnx", "Opt. (Opt. ONNX)",
     {3.89, 2.73, 2.25, 2.1, 2.09, 2.05},
     {256.91, 366.47, 443.86, 476.14, 478.18, 488.9},
     {8.50, 5.21, 86.17}},
    {"fp16-onnx", "Opt. (FP16 ONNX)",
     {1.95, 1.12, 0.76, 0.57, 0.53, 0.53},
     {512.94, 891.08, 1309.46, 1758.22, 1905.78, 1901.56},
     {11.14, 5.65, 219.91}},
}};

void check_batch_size(int batch_size) {
  if (batch_size < 1 || batch_size > kMaxBatchSize) {
    throw ParameterError("batch size must be in [1, 1024], got " + std::to_string(batch_size));
  }
}

}  // namespace

double OverheadModel::mean_ms() const {
  if (exp_mean_ms <= 0.0) return floor_ms;
  return floor_ms + exp_mean_ms * (1.0 - std::exp(-cap_ms / exp_mean_ms));
}

std::span<const BackendProfile> builtin_profiles() { return kProfiles; }

std::optional<BackendProfile> find_profile(std::string_view name) {
  for (const auto& p : kProfiles) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::string builtin_profile_names() {
  std::string names;
  for (const auto& p : kProfiles) {
    if (!names.empty()) names += ", ";
    names += p.name;
  }
  return names;
}

const BackendProfile& profile_by_name(std::string_view name) {
  for (const auto& p : kProfiles) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown profile '" + std::string(name) + "'; built-in profiles: " + builtin_profile_names());
}

double profile_latency(const BackendProfile& profile, int batch_size) {
  check_batch_size(batch_size);
  const auto& lat = profile.per_sample_latency_ms;
  if (batch_size >= kCalibratedBatchSizes.back()) return lat.back();
  for (std::size_t i = 0; i + 1 < kCalibratedBatchSizes.size(); ++i) {
    const int lo = kCalibratedBatchSizes[i];
    const int hi = kCalibratedBatchSizes[i + 1];
    if (batch_size == lo) return lat[i];
    if (batch_size < hi) {
      const double t = std::log(static_cast<double>(batch_size) / lo) / std::log(static_cast<double>(hi) / lo);
      return std::exp((1.0 - t) * std::log(lat[i]) + t * std::log(lat[i + 1]));
    }
  }
  return lat.back();
}

double profile_throughput(const BackendProfile& profile, int batch_size) {
  return 1000.0 / profile_latency(profile, batch_size);
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Prediction> predict(std::span<const std::string> texts) {
  std::vector<Prediction> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    out.push_back({std::string(kLabels[stable_hash(text) % kLabels.size()]), 1.0});
  }
  return out;
}

}  // namespace servingbench::batch
