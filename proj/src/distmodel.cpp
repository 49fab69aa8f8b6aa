#include "coad/distmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "coad/error.hpp"
#include "coad/golden_section.hpp"
#include "coad/normal.hpp"
#include "coad/score_io.hpp"
#include "coad/seed.hpp"

namespace coad {

void validate(const DistributionModel& m) {
  const double fields[] = {m.mu_n, m.mu_a, m.sigma_a, m.sigma_n0, m.k, m.sigma_max, m.h, m.theta_0};
  for (double v : fields) {
    if (!std::isfinite(v)) throw DomainError("distribution model has a non-finite parameter");
  }
  if (!(m.k > 0.0)) throw DomainError("k must be positive");
  if (!(m.h > 0.0)) throw DomainError("h must be positive");
  if (!(m.sigma_n0 > 0.0)) throw DomainError("sigma_n0 must be positive");
  if (!(m.sigma_a > 0.0)) throw DomainError("sigma_a must be positive");
  if (m.sigma_max < 0.0) throw DomainError("sigma_max must be nonnegative");
  if (m.theta_0 < 0.0) throw DomainError("theta_0 must be nonnegative");
  if (m.k == m.h) throw DomainError("degenerate denominator k - h = 0 (k == h)");
}

double sigma_n(const DistributionModel& m, double theta) {
  double s = m.sigma_n0 * std::exp(-m.k * theta);
  if (theta > m.theta_0) s += m.sigma_max * -std::expm1(-m.h * (theta - m.theta_0));
  return s;
}

double sigma_n_derivative(const DistributionModel& m, double theta) {
  double d = -m.k * m.sigma_n0 * std::exp(-m.k * theta);
  if (theta >= m.theta_0) d += m.h * m.sigma_max * std::exp(-m.h * (theta - m.theta_0));
  return d;
}

double radi_closed_form(const DistributionModel& m, double theta) {
  const double s = sigma_n(m, theta);
  return normal_cdf((m.mu_a - m.mu_n) / std::sqrt(s * s + m.sigma_a * m.sigma_a));
}

RadiGradient radi_gradient(const DistributionModel& m, double theta) {
  const double s = sigma_n(m, theta);
  const double total_var = s * s + m.sigma_a * m.sigma_a;
  const double z = (m.mu_a - m.mu_n) / std::sqrt(total_var);
  const double dz = -(m.mu_a - m.mu_n) * s * sigma_n_derivative(m, theta) / std::pow(total_var, 1.5);
  return {normal_pdf(z) * dz, theta == m.theta_0 && m.sigma_max > 0.0};
}

ThetaStar theta_star(const DistributionModel& m, const ThetaStarOptions& options) {
  validate(m);
  if (!(m.sigma_max > 0.0)) {
    throw DomainError("theta* needs sigma_max > 0; sigma_n is monotone without the noise term");
  }
  ThetaStar out;
  const double common = std::log(m.k * m.sigma_n0) - std::log(m.h * m.sigma_max);
  out.derived_form = (common - m.h * m.theta_0) / (m.k - m.h);
  out.paper_form = (common + m.h * m.theta_0) / (m.k - m.h);

  const double width = options.bracket_width.value_or(20.0 / std::min(m.k, m.h));
  const double lo = m.theta_0;
  const double hi = m.theta_0 + width;
  out.numeric = golden_section_minimize([&](double t) { return sigma_n(m, t); }, lo, hi,
                                        options.tolerance);
  const double edge_slack = 10.0 * options.tolerance;
  if (out.numeric - lo <= edge_slack || hi - out.numeric <= edge_slack) {
    throw NoInteriorOptimumError("sigma_n has no interior minimum on [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]; search ended at theta = " +
                                 std::to_string(out.numeric));
  }
  out.derived_matches = std::abs(out.derived_form - out.numeric) <= options.agreement;
  out.paper_matches = std::abs(out.paper_form - out.numeric) <= options.agreement;
  return out;
}

ScoreSet sample_scores(const DistributionModel& m, double theta, std::size_t n_normal,
                       std::size_t n_anomaly, std::uint64_t seed) {
  if (n_normal == 0 || n_anomaly == 0) throw InputError("sample counts must be at least 1");
  ScoreSet out;
  out.normal.resize(n_normal);
  out.anomaly.resize(n_anomaly);

  std::mt19937_64 normal_rng(derive_seed(seed, "normal"));
  std::normal_distribution<double> normal_dist(m.mu_n, sigma_n(m, theta));
  for (double& x : out.normal) x = normal_dist(normal_rng);

  std::mt19937_64 anomaly_rng(derive_seed(seed, "anomaly"));
  std::normal_distribution<double> anomaly_dist(m.mu_a, m.sigma_a);
  for (double& x : out.anomaly) x = anomaly_dist(anomaly_rng);
  return out;
}

ThetaSweep sweep(const DistributionModel& m, double theta_lo, double theta_hi, std::size_t steps) {
  if (!(theta_lo < theta_hi)) throw InputError("sweep needs theta_lo < theta_hi");
  if (steps < 2) throw InputError("sweep needs at least 2 steps");
  ThetaSweep s;
  s.thetas.reserve(steps);
  const double width = theta_hi - theta_lo;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = i + 1 == steps ? theta_hi
                                    : theta_lo + width * static_cast<double>(i) / static_cast<double>(steps - 1);
    s.thetas.push_back(t);
    s.sigma_values.push_back(sigma_n(m, t));
    s.radi_values.push_back(radi_closed_form(m, t));
  }
  return s;
}

void write_sweep_csv(std::ostream& out, const ThetaSweep& s) {
  out << "theta,sigma_n,radi\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < s.thetas.size(); ++i) {
    out << s.thetas[i] << ',' << s.sigma_values[i] << ',' << s.radi_values[i] << '\n';
  }
}

ThetaSweep parse_sweep_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != "theta,sigma_n,radi") {
    throw InputError(source + ":1: expected header 'theta,sigma_n,radi'");
  }
  ThetaSweep s;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw InputError(where + ": expected 3 columns");
    const std::string_view view(line);
    s.thetas.push_back(parse_finite(view.substr(0, c1), where));
    s.sigma_values.push_back(parse_finite(view.substr(c1 + 1, c2 - c1 - 1), where));
    s.radi_values.push_back(parse_finite(view.substr(c2 + 1), where));
  }
  return s;
}

DistributionModel model_from_key_values(const KeyValues& kv, const DistributionModel& base) {
  reject_unknown_keys(kv, {"mu_n", "mu_a", "sigma_a", "sigma_n0", "k", "sigma_max", "h", "theta_0"});
  DistributionModel m = base;
  m.mu_n = kv_double(kv, "mu_n", m.mu_n);
  m.mu_a = kv_double(kv, "mu_a", m.mu_a);
  m.sigma_a = kv_double(kv, "sigma_a", m.sigma_a);
  m.sigma_n0 = kv_double(kv, "sigma_n0", m.sigma_n0);
  m.k = kv_double(kv, "k", m.k);
  m.sigma_max = kv_double(kv, "sigma_max", m.sigma_max);
  m.h = kv_double(kv, "h", m.h);
  m.theta_0 = kv_double(kv, "theta_0", m.theta_0);
  return m;
}

DistributionModel load_model(const std::filesystem::path& path) {
  return model_from_key_values(read_key_values(path));
}

void write_model(std::ostream& out, const DistributionModel& m) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "mu_n = " << m.mu_n << "\nmu_a = " << m.mu_a << "\nsigma_a = " << m.sigma_a
      << "\nsigma_n0 = " << m.sigma_n0 << "\nk = " << m.k << "\nsigma_max = " << m.sigma_max
      << "\nh = " << m.h << "\ntheta_0 = " << m.theta_0 << '\n';
}

}  // namespace coad
