#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace servingbench::arrivals {

enum class Kind { Exponential, Gamma };

std::string_view to_string(Kind kind);

/// Inter-arrival time distribution. All times are in seconds.
///
/// Construct through make_exponential / make_gamma_scaled; those enforce the
/// invariants (positive parameters, mean == 1/rate or mean == shape * scale).
struct ArrivalProcess {
  Kind kind = Kind::Exponential;
  double rate_lambda = 0.0;  // per second, Exponential only
  double shape_alpha = 0.0;  // Gamma only
  double scale_theta = 0.0;  // seconds, Gamma only
  double target_mean = 0.0;  // seconds

  double theoretical_mean() const { return target_mean; }
  double theoretical_variance() const;

  bool operator==(const ArrivalProcess&) const = default;
};

ArrivalProcess make_exponential(double rate_lambda);
ArrivalProcess make_gamma_scaled(double shape_alpha, double target_mean);

// Traffic presets: steady (Poisson, rate 0.5), moderate (Gamma shape 1.2) and
// extreme (Gamma shape 0.8) burstiness, all with a 2 s mean gap.
ArrivalProcess preset(std::string_view name);
std::optional<ArrivalProcess> find_preset(std::string_view name);
inline constexpr std::string_view kPresetNames[] = {"steady", "moderate", "extreme"};

/// Draws n inter-arrival gaps. Pure in (process, seed, n).
std::vector<double> sample(const ArrivalProcess& process, std::uint64_t seed, std::size_t n);

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, n - 1 denominator
};

SampleStats empirical_stats(std::span<const double> samples);

}  // namespace servingbench::arrivals
