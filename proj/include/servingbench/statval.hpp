#pragma once

#include <optional>
#include <span>
#include <vector>

#include "servingbench/arrivals.hpp"

namespace servingbench::statval {

/// A density sampled on a strictly increasing grid (seconds -> 1/seconds).
struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> values;

  // Trapezoidal integral of values over grid.
  double integral() const;
};

// Lanczos approximation (g = 7, 9 coefficients) with reflection below 0.5.
double gamma_function(double x);
double log_gamma_function(double x);

DensityCurve theoretical_pdf(const arrivals::ArrivalProcess& process, std::span<const double> grid);

enum class Boundary {
  None,          // plain Gaussian KDE on the real line
  ReflectAtZero  // mirror samples about 0; keeps all mass on [0, inf)
};

// Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel density estimate. A nullopt bandwidth selects Silverman's
/// rule; explicit bandwidths must be positive.
DensityCurve kde(std::span<const double> samples, std::optional<double> bandwidth,
                 std::span<const double> grid, Boundary boundary = Boundary::None);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  double height = 0.0;  // density-normalized
};

std::vector<HistogramBin> histogram(std::span<const double> samples, std::size_t bin_count);

// 512 evenly spaced points on (0, 6 * target_mean]; x = 0 is left out so the
// shape < 1 singularity never enters a report.
std::vector<double> default_grid(const arrivals::ArrivalProcess& process);

inline constexpr std::size_t kDefaultGridPoints = 512;
inline constexpr std::size_t kDefaultHistogramBins = 50;

struct FitReport {
  arrivals::SampleStats empirical;
  double theoretical_mean = 0.0;
  double theoretical_variance = 0.0;
  double bandwidth = 0.0;
  double max_abs_density_gap = 0.0;
  double l1_density_gap = 0.0;
  DensityCurve kde_curve;
  DensityCurve pdf_curve;
  std::vector<HistogramBin> histogram;
};

/// Compares samples against the process: moments plus KDE-vs-PDF gaps. The
/// KDE uses Silverman's bandwidth and reflection at zero because every
/// inter-arrival sample is non-negative.
FitReport fit_report(std::span<const double> samples, const arrivals::ArrivalProcess& process,
                     std::span<const double> grid);

struct FitThresholds {
  double mean_rel_tol = 0.02;
  double variance_rel_tol = 0.10;
  double max_abs_gap = 0.05;
};

struct FitVerdict {
  bool mean_ok = false;
  bool variance_ok = false;
  bool density_ok = false;
  bool passed() const { return mean_ok && variance_ok && density_ok; }
};

FitVerdict evaluate(const FitReport& fit, const FitThresholds& thresholds = {});

}  // namespace servingbench::statval
