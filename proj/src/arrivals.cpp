#include "servingbench/arrivals.hpp"

#include <cmath>

#include "servingbench/errors.hpp"
#include "servingbench/rng.hpp"

namespace servingbench::arrivals {

namespace {

// Marsaglia & Tsang (2000) squeeze method, valid for shape >= 1.
double gamma_unit_scale(Xoshiro256& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double draw_gamma(Xoshiro256& rng, double shape, double scale) {
  if (shape >= 1.0) return gamma_unit_scale(rng, shape) * scale;
  // Shape boost: G(a) = G(a + 1) * U^(1/a).
  const double g = gamma_unit_scale(rng, shape + 1.0);
  const double u = 1.0 - rng.uniform();
  return g * std::pow(u, 1.0 / shape) * scale;
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::string_view to_string(Kind kind) {
  return kind == Kind::Exponential ? "exponential" : "gamma";
}

double ArrivalProcess::theoretical_variance() const {
  if (kind == Kind::Exponential) return 1.0 / (rate_lambda * rate_lambda);
  return shape_alpha * scale_theta * scale_theta;
}

ArrivalProcess make_exponential(double rate_lambda) {
  if (!positive_finite(rate_lambda)) {
    throw ParameterError("exponential rate must be positive, got " + std::to_string(rate_lambda));
  }
  ArrivalProcess p;
  p.kind = Kind::Exponential;
  p.rate_lambda = rate_lambda;
  p.target_mean = 1.0 / rate_lambda;
  return p;
}

ArrivalProcess make_gamma_scaled(double shape_alpha, double target_mean) {
  if (!positive_finite(shape_alpha)) {
    throw ParameterError("gamma shape must be positive, got " + std::to_string(shape_alpha));
  }
  if (!positive_finite(target_mean)) {
    throw ParameterError("gamma target mean must be positive, got " + std::to_string(target_mean));
  }
  ArrivalProcess p;
  p.kind = Kind::Gamma;
  p.shape_alpha = shape_alpha;
  p.scale_theta = target_mean / shape_alpha;
  p.target_mean = target_mean;
  return p;
}

std::optional<ArrivalProcess> find_preset(std::string_view name) {
  if (name == "steady") return make_exponential(0.5);
  if (name == "moderate") return make_gamma_scaled(1.2, 2.0);
  if (name == "extreme") return make_gamma_scaled(0.8, 2.0);
  return std::nullopt;
}

ArrivalProcess preset(std::string_view name) {
  auto p = find_preset(name);
  if (!p) throw ConfigError("unknown traffic preset '" + std::string(name) + "' (steady|moderate|extreme)");
  return *p;
}

std::vector<double> sample(const ArrivalProcess& process, std::uint64_t seed, std::size_t n) {
  if (n == 0) throw ParameterError("sample count must be at least 1");
  // Re-validate so hand-built structs cannot smuggle in bad parameters.
  const ArrivalProcess checked = process.kind == Kind::Exponential
                                     ? make_exponential(process.rate_lambda)
                                     : make_gamma_scaled(process.shape_alpha, process.target_mean);
  Xoshiro256 rng(seed);
  std::vector<double> out;
  out.reserve(n);
  if (checked.kind == Kind::Exponential) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(-std::log(1.0 - rng.uniform()) / checked.rate_lambda);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(draw_gamma(rng, checked.shape_alpha, checked.scale_theta));
    }
  }
  return out;
}

SampleStats empirical_stats(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw InsufficientDataError("empirical statistics need at least 2 samples, got " +
                                std::to_string(samples.size()));
  }
  // Welford; numerically matches the two-pass formula to ~1e-15 relative.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : samples) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  return {samples.size(), mean, m2 / static_cast<double>(samples.size() - 1)};
}

}  // namespace servingbench::arrivals
