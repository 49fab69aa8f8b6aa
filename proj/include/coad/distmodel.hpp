#pragma once

// Parametric model of anomaly-score distributions as a function of the
// overfitting level theta (measured as ARQ).
//
//   normal scores   ~ N(mu_n, sigma_n(theta)^2)
//   anomaly scores  ~ N(mu_a, sigma_a^2)
//   sigma_n(theta)  = sigma_n0 exp(-k theta) + noise(theta)
//   noise(theta)    = sigma_max (1 - exp(-h (theta - theta_0)))  for theta > theta_0, else 0
//   RADI(theta)     = Phi((mu_a - mu_n) / sqrt(sigma_n(theta)^2 + sigma_a^2))
//
// The RADI maximizer theta* is the stationary point of sigma_n. Setting
// d sigma_n / d theta = 0 gives
//
//   theta* = [ln(k sigma_n0) - ln(h sigma_max) - h theta_0] / (k - h)
//
// The commonly quoted variant with `+ h theta_0` is also reported; a
// golden-section search on sigma_n decides which one holds.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "coad/kv_config.hpp"
#include "coad/metrics.hpp"

namespace coad {

struct DistributionModel {
  double mu_n = 0.0;
  double mu_a = 1.0;
  double sigma_a = 1.0;
  double sigma_n0 = 1.0;
  double k = 2.0;          // variance decay rate
  double sigma_max = 1.0;  // asymptotic noise spread
  double h = 1.0;          // noise growth rate
  double theta_0 = 0.0;    // noise onset
};

/// Throws DomainError when an invariant fails (k, h, sigma_n0, sigma_a > 0;
/// sigma_max, theta_0 >= 0; k != h; all finite).
void validate(const DistributionModel& model);

double sigma_n(const DistributionModel& model, double theta);

/// d sigma_n / d theta; at theta_0 the right-hand derivative.
double sigma_n_derivative(const DistributionModel& model, double theta);

double radi_closed_form(const DistributionModel& model, double theta);

struct RadiGradient {
  double value = 0.0;
  bool at_kink = false;  // theta == theta_0 with sigma_max > 0: right-hand value
};

RadiGradient radi_gradient(const DistributionModel& model, double theta);

struct ThetaStarOptions {
  /// Search bracket is [theta_0, theta_0 + bracket_width]; defaults to 20 / min(k, h).
  std::optional<double> bracket_width;
  double tolerance = 1e-9;
  double agreement = 1e-6;
};

struct ThetaStar {
  double derived_form = 0.0;  // -h theta_0 term
  double paper_form = 0.0;    // +h theta_0 term
  double numeric = 0.0;
  bool derived_matches = false;
  bool paper_matches = false;
};

/// Throws DomainError if sigma_max == 0 and NoInteriorOptimumError if the
/// search ends on a bracket boundary.
ThetaStar theta_star(const DistributionModel& model, const ThetaStarOptions& options = {});

/// Normal scores from N(mu_n, sigma_n(theta)^2), anomaly scores from N(mu_a, sigma_a^2).
ScoreSet sample_scores(const DistributionModel& model, double theta, std::size_t n_normal,
                       std::size_t n_anomaly, std::uint64_t seed);

struct ThetaSweep {
  std::vector<double> thetas;
  std::vector<double> sigma_values;
  std::vector<double> radi_values;
};

ThetaSweep sweep(const DistributionModel& model, double theta_lo, double theta_hi, std::size_t steps);

/// CSV with header `theta,sigma_n,radi`, full round-trip precision.
void write_sweep_csv(std::ostream& out, const ThetaSweep& s);
ThetaSweep parse_sweep_csv(std::istream& in, const std::string& source);

/// Keys: mu_n, mu_a, sigma_a, sigma_n0, k, sigma_max, h, theta_0. Missing
/// keys keep the values of `base`; unknown keys throw ConfigError.
DistributionModel model_from_key_values(const KeyValues& kv, const DistributionModel& base = {});
DistributionModel load_model(const std::filesystem::path& path);
void write_model(std::ostream& out, const DistributionModel& model);

}  // namespace coad
