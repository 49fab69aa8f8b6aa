#include "coad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "coad/error.hpp"
#include "coad/normal.hpp"

namespace coad {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      throw InputError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void require_scores(std::span<const double> normal, std::span<const double> anomaly) {
  if (normal.empty()) throw InputError("normal score class is empty");
  if (anomaly.empty()) throw InputError("anomaly score class is empty");
  require_finite(normal, "normal scores");
  require_finite(anomaly, "anomaly scores");
}

}  // namespace

double compute_arq(std::span<const double> predicted, std::span<const double> ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw InputError("ARQ: predicted has " + std::to_string(predicted.size()) +
                     " values but ground truth has " + std::to_string(ground_truth.size()));
  }
  if (predicted.empty()) throw InputError("ARQ: no instances");
  require_finite(predicted, "ARQ predicted");
  require_finite(ground_truth, "ARQ ground truth");

  double deviation = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    deviation += std::abs(predicted[i] - ground_truth[i]);
    denominator += ground_truth[i];
  }
  if (!(denominator > 0.0)) {
    throw DomainError("ARQ: denominator sum(ground_truth) = " + std::to_string(denominator) +
                      " must be strictly positive");
  }
  return deviation / denominator;
}

double radi_empirical(std::span<const double> normal, std::span<const double> anomaly) {
  require_scores(normal, anomaly);
  std::vector<double> n(normal.begin(), normal.end());
  std::vector<double> a(anomaly.begin(), anomaly.end());
  std::sort(n.begin(), n.end());
  std::sort(a.begin(), a.end());

  // below: normals strictly less than the current anomaly score,
  // not_above: normals less than or equal to it.
  std::size_t below = 0;
  std::size_t not_above = 0;
  std::uint64_t greater = 0;
  std::uint64_t ties = 0;
  for (double score : a) {
    while (below < n.size() && n[below] < score) ++below;
    while (not_above < n.size() && n[not_above] <= score) ++not_above;
    greater += below;
    ties += not_above - below;
  }
  const double pairs = static_cast<double>(a.size()) * static_cast<double>(n.size());
  return (static_cast<double>(greater) + 0.5 * static_cast<double>(ties)) / pairs;
}

double auroc(std::span<const double> normal, std::span<const double> anomaly) {
  require_scores(normal, anomaly);
  struct Labeled {
    double score;
    bool anomalous;
  };
  std::vector<Labeled> all;
  all.reserve(normal.size() + anomaly.size());
  for (double s : normal) all.push_back({s, false});
  for (double s : anomaly) all.push_back({s, true});
  std::sort(all.begin(), all.end(),
            [](const Labeled& l, const Labeled& r) { return l.score > r.score; });

  const double pos = static_cast<double>(anomaly.size());
  const double neg = static_cast<double>(normal.size());
  double tpr_prev = 0.0;
  double fpr_prev = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double area = 0.0;
  // Lowering the threshold past each distinct score adds one ROC vertex.
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].score;
    for (; i < all.size() && all[i].score == threshold; ++i) {
      (all[i].anomalous ? tp : fp) += 1.0;
    }
    const double tpr = tp / pos;
    const double fpr = fp / neg;
    area += (fpr - fpr_prev) * (tpr + tpr_prev) * 0.5;
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  return area;
}

GaussianParams fit_gaussian(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw InputError("Gaussian fit needs at least 2 samples, got " + std::to_string(samples.size()));
  }
  require_finite(samples, "Gaussian fit");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw InputError("histogram needs at least one bin");
  if (!(hi > lo)) throw InputError("histogram range must satisfy lo < hi");
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  edges.back() = hi;
  return edges;
}

Histogram histogram(std::span<const double> samples, std::span<const double> edges) {
  if (samples.empty()) throw InputError("histogram of an empty sample");
  if (edges.size() < 2) throw InputError("histogram needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InputError("histogram edges must be strictly increasing");
  }
  require_finite(samples, "histogram");

  const std::size_t bins = edges.size() - 1;
  std::vector<std::size_t> counts(bins, 0);
  for (double x : samples) {
    // Bin b holds [edges[b], edges[b+1]); the last bin is closed on the right.
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    counts[std::min(b, bins - 1)] += 1;
  }
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.masses.resize(bins);
  const double n = static_cast<double>(samples.size());
  for (std::size_t b = 0; b < bins; ++b) h.masses[b] = static_cast<double>(counts[b]) / n;
  return h;
}

double tvd(const Histogram& p, const Histogram& q) {
  if (p.edges != q.edges) throw InputError("TVD: histograms have different bin edges");
  if (p.masses.size() != q.masses.size() || p.masses.size() + 1 != p.edges.size()) {
    throw InputError("TVD: mass and edge counts disagree");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b) sum += std::abs(p.masses[b] - q.masses[b]);
  return 0.5 * sum;
}

Histogram discretize_gaussian(const GaussianParams& g, std::span<const double> edges) {
  if (!(g.stddev > 0.0)) throw DegenerateDistributionError("Gaussian has zero standard deviation");
  if (edges.size() < 2) throw InputError("discretization needs at least two edges");
  std::vector<double> cdf(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) cdf[i] = normal_cdf(edges[i], g.mean, g.stddev);
  const double total = cdf.back() - cdf.front();
  if (!(total > 0.0)) throw DegenerateDistributionError("Gaussian has no mass over the histogram range");

  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.masses.resize(edges.size() - 1);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) h.masses[b] = (cdf[b + 1] - cdf[b]) / total;
  return h;
}

GaussianTvd tvd_to_gaussian(std::span<const double> samples, std::size_t bins) {
  if (bins < 2) throw InputError("TVD to Gaussian needs at least 2 bins");
  const GaussianParams fit = fit_gaussian(samples);
  if (!(fit.stddev > 0.0)) {
    throw DegenerateDistributionError("samples are constant; fitted standard deviation is zero");
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const std::vector<double> edges = equal_width_edges(*lo, *hi, bins);
  const Histogram empirical = histogram(samples, edges);
  const Histogram model = discretize_gaussian(fit, edges);
  return {fit, tvd(empirical, model)};
}

double percentile(std::span<const double> samples, double p) {
  if (samples.empty()) throw InputError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw InputError("percentile must lie in [0, 100]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(pos));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lower);
  return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

}  // namespace coad
