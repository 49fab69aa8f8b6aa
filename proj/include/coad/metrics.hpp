#pragma once

// Score-separation and overfitting metrics over scalar anomaly scores.
//
// All functions are pure; inputs are borrowed as spans and never mutated.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace coad {

/// Labeled anomaly scores: the normal class and the anomalous class.
struct ScoreSet {
  std::vector<double> normal;
  std::vector<double> anomaly;
};

struct GaussianParams {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Normalized histogram. `edges` has one more entry than `masses`.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> masses;
};

/// Aberrance retention quotient: sum |predicted - truth| / sum truth.
///
/// Throws InputError on length mismatch or empty input and DomainError when
/// the ground-truth sum is not strictly positive.
double compute_arq(std::span<const double> predicted, std::span<const double> ground_truth);

/// P(anomaly score > normal score) with ties counted as one half.
///
/// Sort-and-merge rank statistic, O((|A| + |N|) log(|A| + |N|)).
double radi_empirical(std::span<const double> normal, std::span<const double> anomaly);
inline double radi_empirical(const ScoreSet& s) { return radi_empirical(s.normal, s.anomaly); }

/// Area under the ROC curve by sweeping every distinct threshold and
/// integrating the (FPR, TPR) polyline with the trapezoid rule.
double auroc(std::span<const double> normal, std::span<const double> anomaly);
inline double auroc(const ScoreSet& s) { return auroc(s.normal, s.anomaly); }

/// Sample mean and maximum-likelihood (divide-by-N) standard deviation.
GaussianParams fit_gaussian(std::span<const double> samples);

/// Fraction of samples per bin; samples outside the edge range are clipped
/// into the first or last bin.
Histogram histogram(std::span<const double> samples, std::span<const double> edges);

/// `bins + 1` equally spaced edges spanning [lo, hi].
std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins);

/// Total variation distance, 0.5 * sum |p_b - q_b|. Edges must match exactly.
double tvd(const Histogram& p, const Histogram& q);

/// Gaussian masses over `edges` by CDF differences, renormalized so the
/// masses over [edges.front(), edges.back()] sum to one.
Histogram discretize_gaussian(const GaussianParams& g, std::span<const double> edges);

struct GaussianTvd {
  GaussianParams fit;
  double tvd = 0.0;
};

/// Fits a Gaussian, histograms the samples over [min, max] with `bins`
/// equal-width bins and returns the TVD between the two.
///
/// Throws DegenerateDistributionError when the fitted spread is zero.
GaussianTvd tvd_to_gaussian(std::span<const double> samples, std::size_t bins);

/// Linear-interpolated percentile (p in [0, 100]) of a sample.
double percentile(std::span<const double> samples, double p);

}  // namespace coad
