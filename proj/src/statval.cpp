#include "servingbench/statval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "servingbench/errors.hpp"

namespace servingbench::statval {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoeffs = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

// Lanczos series A_g(z) for z = x - 1.
double lanczos_sum(double z) {
  double a = kLanczosCoeffs[0];
  for (std::size_t i = 1; i < kLanczosCoeffs.size(); ++i) {
    a += kLanczosCoeffs[i] / (z + static_cast<double>(i));
  }
  return a;
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw ParameterError("density grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0) {
      throw ParameterError("density grid values must be finite and non-negative");
    }
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw ParameterError("density grid must be strictly increasing");
    }
  }
}

// Linear-interpolated quantile (the common "type 7" definition).
double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    sum += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  }
  return sum;
}

}  // namespace

double DensityCurve::integral() const { return trapezoid(grid, values); }

double gamma_function(double x) {
  if (x < 0.5) {
    return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_function(1.0 - x));
  }
  const double z = x - 1.0;
  const double t = z + kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * lanczos_sum(z);
}

double log_gamma_function(double x) {
  if (x <= 0.0) throw ParameterError("log_gamma_function requires x > 0");
  if (x < 0.5) return std::log(gamma_function(x));
  const double z = x - 1.0;
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(lanczos_sum(z));
}

DensityCurve theoretical_pdf(const arrivals::ArrivalProcess& process, std::span<const double> grid) {
  check_grid(grid);
  DensityCurve curve{{grid.begin(), grid.end()}, std::vector<double>(grid.size())};
  if (process.kind == arrivals::Kind::Exponential) {
    const double rate = process.rate_lambda;
    if (!(rate > 0.0)) throw ParameterError("exponential rate must be positive");
    for (std::size_t i = 0; i < grid.size(); ++i) curve.values[i] = rate * std::exp(-rate * grid[i]);
    return curve;
  }

  const double shape = process.shape_alpha;
  const double scale = process.scale_theta;
  if (!(shape > 0.0) || !(scale > 0.0)) throw ParameterError("gamma shape and scale must be positive");
  const double log_norm = log_gamma_function(shape) + shape * std::log(scale);
  auto density = [&](double x) {
    return std::exp((shape - 1.0) * std::log(x) - x / scale - log_norm);
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    if (x > 0.0) {
      curve.values[i] = density(x);
    } else if (shape > 1.0) {
      curve.values[i] = 0.0;
    } else if (shape == 1.0) {
      curve.values[i] = 1.0 / scale;
    } else {
      // Singular at 0: report the value at the smallest positive grid point.
      if (grid.size() < 2) throw ParameterError("shape < 1 density at 0 needs a positive grid point");
      curve.values[i] = density(grid[1]);
    }
  }
  return curve;
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw InsufficientDataError("bandwidth selection needs at least 2 samples");
  const auto stats = arrivals::empirical_stats(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(stats.variance);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;  // heavy ties collapse the IQR
  if (spread <= 0.0) {
    throw ParameterError("samples have zero spread; pass an explicit bandwidth");
  }
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

DensityCurve kde(std::span<const double> samples, std::optional<double> bandwidth,
                 std::span<const double> grid, Boundary boundary) {
  if (samples.size() < 2) throw InsufficientDataError("KDE needs at least 2 samples");
  if (bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth))) {
    throw ParameterError("KDE bandwidth must be positive");
  }
  if (grid.empty()) throw ParameterError("density grid is empty");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);

  // Sorted samples let each grid point touch only kernels within 8.5 h
  // (contributions beyond that are below 1e-15 relative).
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double reach = 8.5 * h;
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  auto kernel_sum = [&](double x) {
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
    auto last = std::upper_bound(first, sorted.end(), x + reach);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / h;
      sum += std::exp(-0.5 * u * u);
    }
    return sum;
  };

  DensityCurve curve{{grid.begin(), grid.end()}, std::vector<double>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = kernel_sum(grid[i]);
    if (boundary == Boundary::ReflectAtZero) sum += kernel_sum(-grid[i]);
    curve.values[i] = sum * norm;
  }
  return curve;
}

std::vector<HistogramBin> histogram(std::span<const double> samples, std::size_t bin_count) {
  if (samples.empty()) throw InsufficientDataError("histogram of an empty sample");
  if (bin_count < 1) throw ParameterError("histogram needs at least one bin");
  auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bin_count);
  std::vector<std::size_t> counts(bin_count, 0);
  for (double x : samples) {
    auto idx = static_cast<std::size_t>((x - lo) / width);
    counts[std::min(idx, bin_count - 1)]++;
  }
  std::vector<HistogramBin> bins(bin_count);
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < bin_count; ++i) {
    bins[i].left = lo + width * static_cast<double>(i);
    bins[i].right = i + 1 == bin_count ? hi : lo + width * static_cast<double>(i + 1);
    bins[i].height = static_cast<double>(counts[i]) / (n * width);
  }
  return bins;
}

std::vector<double> default_grid(const arrivals::ArrivalProcess& process) {
  const double upper = 6.0 * process.target_mean;
  std::vector<double> grid(kDefaultGridPoints);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = upper * static_cast<double>(i + 1) / static_cast<double>(kDefaultGridPoints);
  }
  return grid;
}

FitReport fit_report(std::span<const double> samples, const arrivals::ArrivalProcess& process,
                     std::span<const double> grid) {
  FitReport report;
  report.empirical = arrivals::empirical_stats(samples);
  report.theoretical_mean = process.theoretical_mean();
  report.theoretical_variance = process.theoretical_variance();
  report.bandwidth = silverman_bandwidth(samples);
  report.pdf_curve = theoretical_pdf(process, grid);
  report.kde_curve = kde(samples, report.bandwidth, grid, Boundary::ReflectAtZero);
  report.histogram = histogram(samples, kDefaultHistogramBins);

  std::vector<double> abs_gap(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    abs_gap[i] = std::abs(report.kde_curve.values[i] - report.pdf_curve.values[i]);
  }
  report.max_abs_density_gap = *std::max_element(abs_gap.begin(), abs_gap.end());
  report.l1_density_gap = trapezoid(grid, abs_gap);
  return report;
}

FitVerdict evaluate(const FitReport& fit, const FitThresholds& thresholds) {
  FitVerdict v;
  v.mean_ok = std::abs(fit.empirical.mean - fit.theoretical_mean) <=
              thresholds.mean_rel_tol * fit.theoretical_mean;
  v.variance_ok = std::abs(fit.empirical.variance - fit.theoretical_variance) <=
                  thresholds.variance_rel_tol * fit.theoretical_variance;
  v.density_ok = fit.max_abs_density_gap <= thresholds.max_abs_gap;
  return v;
}

}  // namespace servingbench::statval
