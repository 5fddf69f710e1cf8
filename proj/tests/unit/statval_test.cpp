#include "servingbench/statval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "servingbench/errors.hpp"

namespace servingbench::statval {
namespace {

using arrivals::make_exponential;
using arrivals::make_gamma_scaled;

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

void expect_rel(double actual, double expected, double tol) {
  EXPECT_NEAR(actual, expected, tol * std::abs(expected)) << "expected " << expected;
}

// Reference values from an arbitrary-precision evaluation.
TEST(GammaFunction, MatchesHighPrecisionValues) {
  expect_rel(gamma_function(1.2), 0.9181687423997606, 1e-13);
  expect_rel(gamma_function(0.8), 1.1642297137253034, 1e-13);
  expect_rel(gamma_function(0.5), 1.7724538509055160, 1e-13);
  expect_rel(gamma_function(30.0), 8.841761993739702e30, 1e-13);
}

TEST(GammaFunction, FactorialsOnIntegers) {
  double factorial = 1.0;
  for (int n = 1; n <= 30; ++n) {
    expect_rel(gamma_function(n), factorial, 1e-13);
    factorial *= n;
  }
}

TEST(GammaFunction, RecurrenceOverRange) {
  for (double x = 0.01; x < 29.0; x += 0.137) {
    expect_rel(gamma_function(x + 1.0), x * gamma_function(x), 1e-12);
  }
  EXPECT_NEAR(log_gamma_function(30.0), std::log(8.841761993739702e30), 1e-12);
}

TEST(TheoreticalPdf, ExponentialAtZeroIsRate) {
  const std::vector<double> grid{0.0, 1.0};
  const auto c = theoretical_pdf(make_exponential(0.5), grid);
  EXPECT_DOUBLE_EQ(c.values[0], 0.5);
  EXPECT_NEAR(c.values[1], 0.5 * std::exp(-0.5), 1e-15);
}

TEST(TheoreticalPdf, GammaShapeOneEqualsExponential) {
  const auto grid = linspace(0.0, 20.0, 1001);
  const auto g = theoretical_pdf(make_gamma_scaled(1.0, 2.0), grid);
  const auto e = theoretical_pdf(make_exponential(0.5), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(g.values[i], e.values[i], 1e-9);
}

TEST(TheoreticalPdf, GammaOracleValue) {
  const std::vector<double> grid{2.0};
  expect_rel(theoretical_pdf(make_gamma_scaled(1.2, 2.0), grid).values[0], 0.2041322476455003, 1e-12);
  const std::vector<double> one{1.0};
  expect_rel(theoretical_pdf(make_gamma_scaled(0.8, 2.0), one).values[0], 0.27662505994789757, 1e-12);
}

TEST(TheoreticalPdf, SingularShapeAtZeroReportsFirstPositivePoint) {
  const auto grid = linspace(0.0, 12.0, 513);
  const auto c = theoretical_pdf(make_gamma_scaled(0.8, 2.0), grid);
  EXPECT_TRUE(std::isfinite(c.values[0]));
  EXPECT_DOUBLE_EQ(c.values[0], c.values[1]);
}

TEST(TheoreticalPdf, RejectsBadGrids) {
  EXPECT_THROW(theoretical_pdf(make_exponential(0.5), {}), ParameterError);
  const std::vector<double> unsorted{1.0, 0.5};
  EXPECT_THROW(theoretical_pdf(make_exponential(0.5), unsorted), ParameterError);
  const std::vector<double> negative{-1.0, 0.5};
  EXPECT_THROW(theoretical_pdf(make_exponential(0.5), negative), ParameterError);
}

TEST(TheoreticalPdf, IntegratesToAboutOneOnDefaultGrid) {
  for (const auto name : arrivals::kPresetNames) {
    const auto p = arrivals::preset(name);
    const auto grid = default_grid(p);
    const double area = theoretical_pdf(p, grid).integral();
    EXPECT_GE(area, 0.9) << name;
    EXPECT_LE(area, 1.05) << name;
  }
}

TEST(DefaultGrid, FiveHundredTwelvePointsUpToSixMeans) {
  const auto grid = default_grid(make_exponential(0.5));
  ASSERT_EQ(grid.size(), kDefaultGridPoints);
  EXPECT_GT(grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(grid.back(), 12.0);
}

TEST(Kde, ConstantSamplesGiveOneGaussianBump) {
  const std::vector<double> samples(50, 2.0);
  const auto grid = linspace(0.0, 4.0, 81);
  const double h = 0.3;
  const auto c = kde(samples, h, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z = (grid[i] - 2.0) / h;
    const double expected = std::exp(-0.5 * z * z) / (h * std::sqrt(2.0 * std::numbers::pi));
    EXPECT_NEAR(c.values[i], expected, 1e-12);
  }
}

TEST(Kde, TwoPointHandValue) {
  const std::vector<double> samples{0.0, 4.0};
  const std::vector<double> grid{2.0};
  EXPECT_NEAR(kde(samples, 1.0, grid).values[0], 0.05399096651318805, 1e-15);
}

TEST(Kde, ErrorCases) {
  const std::vector<double> one{1.0};
  const std::vector<double> two{1.0, 2.0};
  const std::vector<double> grid{1.0};
  EXPECT_THROW(kde(one, 1.0, grid), InsufficientDataError);
  EXPECT_THROW(kde(two, 0.0, grid), ParameterError);
  EXPECT_THROW(kde(two, -1.0, grid), ParameterError);
  const std::vector<double> constant{3.0, 3.0, 3.0};
  EXPECT_THROW(kde(constant, std::nullopt, grid), ParameterError);
}

TEST(Kde, SilvermanRule) {
  // sd = sqrt(2.5), IQR = 2 (type-7 quartiles 2 and 4), n = 5.
  const std::vector<double> xs{1, 2, 3, 4, 5};
  const double expected = 0.9 * std::min(std::sqrt(2.5), 2.0 / 1.34) * std::pow(5.0, -0.2);
  EXPECT_NEAR(silverman_bandwidth(xs), expected, 1e-12);
}

TEST(Kde, IntegratesToOne) {
  const auto samples = arrivals::sample(make_gamma_scaled(5.0, 10.0), 4, 5000);
  const double h = silverman_bandwidth(samples);
  const double hi = *std::max_element(samples.begin(), samples.end()) + 5 * h;
  const auto grid = linspace(0.0, hi, 4000);
  EXPECT_NEAR(kde(samples, std::nullopt, grid).integral(), 1.0, 0.02);

  const auto near_zero = arrivals::sample(make_exponential(0.5), 4, 5000);
  const double h2 = silverman_bandwidth(near_zero);
  const auto grid2 = linspace(0.0, *std::max_element(near_zero.begin(), near_zero.end()) + 5 * h2, 4000);
  EXPECT_NEAR(kde(near_zero, std::nullopt, grid2, Boundary::ReflectAtZero).integral(), 1.0, 0.02);
}

TEST(Kde, ReflectionRemovesBoundaryBias) {
  const auto process = make_exponential(0.5);
  const auto samples = arrivals::sample(process, 42, 10000);
  const auto grid = default_grid(process);
  const auto pdf = theoretical_pdf(process, grid);
  const auto plain = kde(samples, std::nullopt, grid);
  const auto reflected = kde(samples, std::nullopt, grid, Boundary::ReflectAtZero);
  EXPECT_LT(std::abs(reflected.values[0] - pdf.values[0]), std::abs(plain.values[0] - pdf.values[0]));
}

TEST(Histogram, SingleBinOfEqualValues) {
  const std::vector<double> xs{1, 1, 1, 1};
  const auto bins = histogram(xs, 1);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_NEAR(bins[0].height * (bins[0].right - bins[0].left), 1.0, 1e-12);
}

TEST(Histogram, UniformGridGivesEqualHeights) {
  const auto xs = linspace(0.0, 10.0, 1000);
  const auto bins = histogram(xs, 10);
  for (const auto& b : bins) EXPECT_NEAR(b.height, bins[0].height, 1e-12);
}

TEST(Histogram, HeightsIntegrateToOne) {
  const auto xs = arrivals::sample(make_gamma_scaled(0.8, 2.0), 3, 10000);
  const auto bins = histogram(xs, kDefaultHistogramBins);
  double area = 0.0;
  for (const auto& b : bins) area += b.height * (b.right - b.left);
  EXPECT_NEAR(area, 1.0, 1e-12);
}

TEST(Histogram, SteadyFirstBinTallest) {
  const auto xs = arrivals::sample(make_exponential(0.5), 42, 10000);
  const auto bins = histogram(xs, 50);
  for (std::size_t i = 1; i < bins.size(); ++i) EXPECT_GT(bins[0].height, bins[i].height);
}

TEST(Histogram, ErrorCases) {
  EXPECT_THROW(histogram({}, 5), InsufficientDataError);
  const std::vector<double> xs{1.0, 2.0};
  EXPECT_THROW(histogram(xs, 0), ParameterError);
}

TEST(FitReport, SteadyMoments) {
  const auto p = make_exponential(0.5);
  const auto xs = arrivals::sample(p, 42, 10000);
  const auto fit = fit_report(xs, p, default_grid(p));
  EXPECT_DOUBLE_EQ(fit.theoretical_mean, 2.0);
  EXPECT_DOUBLE_EQ(fit.theoretical_variance, 4.0);
  EXPECT_NEAR(fit.empirical.mean, 2.0, 0.04);
  EXPECT_GE(fit.max_abs_density_gap, 0.0);
  EXPECT_GE(fit.l1_density_gap, 0.0);
  EXPECT_LE(fit.max_abs_density_gap, 0.05);
  EXPECT_EQ(fit.kde_curve.grid.size(), kDefaultGridPoints);
  EXPECT_EQ(fit.histogram.size(), kDefaultHistogramBins);
}

TEST(FitReport, ExtremeVariance) {
  const auto p = make_gamma_scaled(0.8, 2.0);
  const auto fit = fit_report(arrivals::sample(p, 42, 10000), p, default_grid(p));
  EXPECT_DOUBLE_EQ(fit.theoretical_variance, 5.0);
}

TEST(FitReport, WrongProcessHasLargerL1Gap) {
  const auto reference = make_gamma_scaled(0.8, 2.0);
  const auto grid = default_grid(reference);
  const auto matched = fit_report(arrivals::sample(reference, 42, 10000), reference, grid);
  const auto wrong = fit_report(arrivals::sample(make_exponential(0.5), 42, 10000), reference, grid);
  EXPECT_GE(wrong.l1_density_gap, 2.0 * matched.l1_density_gap);
}

TEST(FitReport, Deterministic) {
  const auto p = make_gamma_scaled(1.2, 2.0);
  const auto xs = arrivals::sample(p, 8, 3000);
  const auto a = fit_report(xs, p, default_grid(p));
  const auto b = fit_report(xs, p, default_grid(p));
  EXPECT_EQ(a.kde_curve.values, b.kde_curve.values);
  EXPECT_EQ(a.max_abs_density_gap, b.max_abs_density_gap);
  EXPECT_EQ(a.l1_density_gap, b.l1_density_gap);
}

TEST(FitReport, GapShrinksWithSampleSize) {
  const auto p = make_exponential(0.5);
  const auto grid = default_grid(p);
  const auto all = arrivals::sample(p, 2024, 100000);
  auto gap_at = [&](std::size_t n) {
    return fit_report(std::span<const double>(all).first(n), p, grid).max_abs_density_gap;
  };
  EXPECT_LE(gap_at(100000), gap_at(1000));
}

TEST(Evaluate, ThresholdsApply) {
  FitReport fit;
  fit.theoretical_mean = 2.0;
  fit.theoretical_variance = 4.0;
  fit.empirical.mean = 2.03;
  fit.empirical.variance = 4.3;
  fit.max_abs_density_gap = 0.04;
  EXPECT_TRUE(evaluate(fit).passed());
  fit.empirical.mean = 2.05;
  EXPECT_FALSE(evaluate(fit).mean_ok);
  fit.empirical.variance = 4.5;
  EXPECT_FALSE(evaluate(fit).variance_ok);
  fit.max_abs_density_gap = 0.06;
  EXPECT_FALSE(evaluate(fit).density_ok);
}

}  // namespace
}  // namespace servingbench::statval
