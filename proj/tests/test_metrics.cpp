#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "coad/error.hpp"
#include "coad/metrics.hpp"
#include "oracles.hpp"

using namespace coad;
using V = std::vector<double>;

TEST_CASE("compute_arq") {
  CHECK(compute_arq(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
  CHECK(compute_arq(V{2, 4, 6}, V{1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(compute_arq(V{1.5, 2.0}, V{1.0, 3.0}) == doctest::Approx(0.375).epsilon(1e-15));

  CHECK_THROWS_AS(compute_arq(V{1, 2}, V{1}), InputError);
  CHECK_THROWS_AS(compute_arq(V{1, 2}, V{1, -1}), DomainError);
  CHECK_THROWS_AS(compute_arq(V{1}, V{-2}), DomainError);
  CHECK_THROWS_WITH(compute_arq(V{1, 2}, V{0, 0}), doctest::Contains("denominator"));

  SUBCASE("invariant under positive scaling of both sequences") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
      V pred(20), truth(20);
      for (std::size_t i = 0; i < 20; ++i) {
        pred[i] = u(rng);
        truth[i] = u(rng);
      }
      const double c = u(rng) * 10.0;
      V ps = pred, ts = truth;
      for (std::size_t i = 0; i < 20; ++i) {
        ps[i] *= c;
        ts[i] *= c;
      }
      CHECK(compute_arq(ps, ts) == doctest::Approx(compute_arq(pred, truth)).epsilon(1e-12));
    }
  }
}

TEST_CASE("radi_empirical examples") {
  CHECK(radi_empirical(V{0, 1}, V{2, 3}) == 1.0);
  CHECK(radi_empirical(V{5}, V{5}) == 0.5);
  CHECK(radi_empirical(V{2, 4}, V{1, 3}) == 0.25);
  CHECK_THROWS_AS(radi_empirical(V{}, V{1}), InputError);
  CHECK_THROWS_AS(radi_empirical(V{1}, V{}), InputError);
  CHECK_THROWS_AS(radi_empirical(V{1}, V{NAN}), InputError);
}

TEST_CASE("auroc examples") {
  CHECK(auroc(V{0, 1}, V{2, 3}) == 1.0);
  CHECK(auroc(V{1, 2}, V{1, 2}) == 0.5);
  CHECK(auroc(V{2, 4}, V{1, 3}) == 0.25);
  CHECK_THROWS_AS(auroc(V{}, V{1}), InputError);
}

TEST_CASE("radi properties on random sets with ties") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_real_distribution<double> bump(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    V normal, anomaly;
    oracle::random_scores(rng, size(rng), size(rng), normal, anomaly);
    const double r = radi_empirical(normal, anomaly);
    CHECK(r == oracle::pairwise_radi(normal, anomaly));
    CHECK(std::abs(r - auroc(normal, anomaly)) <= 1e-9);
    CHECK(std::abs(r + radi_empirical(anomaly, normal) - 1.0) <= 1e-12);

    V shifted = anomaly;
    const double c = bump(rng);
    for (double& a : shifted) a += c;
    CHECK(radi_empirical(normal, shifted) >= r);
  }
}

TEST_CASE("fit_gaussian") {
  auto g = fit_gaussian(V{0, 0, 0});
  CHECK(g.mean == 0.0);
  CHECK(g.stddev == 0.0);
  g = fit_gaussian(V{-1, 1});
  CHECK(g.mean == 0.0);
  CHECK(g.stddev == 1.0);
  g = fit_gaussian(V{1, 2, 3, 4});
  CHECK(g.mean == 2.5);
  CHECK(g.stddev == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK_THROWS_AS(fit_gaussian(V{1}), InputError);
  CHECK_THROWS_AS(fit_gaussian(V{1, INFINITY}), InputError);
}

TEST_CASE("histogram") {
  auto h = histogram(V{0.5}, V{0, 1});
  CHECK(h.masses == V{1.0});
  h = histogram(V{0.1, 0.9}, V{0, 0.5, 1});
  CHECK(h.masses == V{0.5, 0.5});
  h = histogram(V{-5, 0.5, 5}, V{0, 1});
  CHECK(h.masses == V{1.0});
  h = histogram(V{-5, 0.5, 1.0, 5}, V{0, 0.5, 1});
  CHECK(h.masses == V{0.25, 0.75});

  CHECK_THROWS_AS(histogram(V{}, V{0, 1}), InputError);
  CHECK_THROWS_AS(histogram(V{1}, V{1, 0}), InputError);
  CHECK_THROWS_AS(histogram(V{1}, V{0, 0}), InputError);
}

TEST_CASE("tvd") {
  const Histogram p{{0, 1, 2}, {0.5, 0.5}};
  const Histogram q{{0, 1, 2}, {1.0, 0.0}};
  const Histogram r{{0, 1, 2}, {0.0, 1.0}};
  CHECK(tvd(p, p) == 0.0);
  CHECK(tvd(q, r) == 1.0);
  CHECK(tvd(p, q) == 0.5);
  CHECK_THROWS_AS(tvd(p, Histogram{{0, 1, 3}, {0.5, 0.5}}), InputError);

  SUBCASE("metric axioms on random histograms") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const V edges{0, 1, 2, 3, 4, 5};
    auto random_hist = [&]() {
      Histogram h{edges, V(5)};
      double total = 0.0;
      for (double& m : h.masses) total += (m = u(rng));
      for (double& m : h.masses) m /= total;
      return h;
    };
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = random_hist(), b = random_hist(), c = random_hist();
      CHECK(tvd(a, b) == tvd(b, a));
      CHECK(tvd(a, b) > 0.0);
      CHECK(tvd(a, c) <= tvd(a, b) + tvd(b, c) + 1e-15);
      CHECK(tvd(a, b) <= 1.0);
    }
  }
}

TEST_CASE("tvd_to_gaussian") {
  SUBCASE("standard normal sample is close to its Gaussian fit") {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd(0.0, 1.0);
    V xs(100000);
    for (double& x : xs) x = nd(rng);
    const auto r = tvd_to_gaussian(xs, 256);
    CHECK(r.tvd < 0.02);
    CHECK(r.tvd == doctest::Approx(oracle::tvd_to_gaussian(xs, 256)).epsilon(1e-6));
    CHECK(std::abs(r.fit.mean) < 0.02);
  }

  SUBCASE("uniform grid on [0, 1] is far from Gaussian") {
    V xs(100000);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = (static_cast<double>(i) + 0.5) / 100000.0;
    const auto r = tvd_to_gaussian(xs, 256);
    // Golden value from an independent numpy/scipy histogram computation.
    constexpr double kGolden = 0.16966041271115995;
    CHECK(r.tvd > 0.05);
    CHECK(r.tvd == doctest::Approx(kGolden).epsilon(1e-4));
    CHECK(r.tvd == doctest::Approx(oracle::tvd_to_gaussian(xs, 256)).epsilon(1e-4));
  }

  SUBCASE("seeded uniform sample") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    V xs(100000);
    for (double& x : xs) x = u(rng);
    const auto r = tvd_to_gaussian(xs, 256);
    CHECK(r.tvd > 0.05);
    CHECK(r.tvd == doctest::Approx(oracle::tvd_to_gaussian(xs, 256)).epsilon(1e-4));
  }

  CHECK_THROWS_AS(tvd_to_gaussian(V{3, 3, 3}, 16), DegenerateDistributionError);
  CHECK_THROWS_AS(tvd_to_gaussian(V{1, 2, 3}, 1), InputError);
  CHECK_THROWS_AS(tvd_to_gaussian(V{1}, 16), InputError);
}

TEST_CASE("percentile") {
  CHECK(percentile(V{3, 1, 2}, 50.0) == 2.0);
  CHECK(percentile(V{0, 10}, 99.0) == doctest::Approx(9.9));
  CHECK(percentile(V{4}, 0.0) == 4.0);
  CHECK_THROWS_AS(percentile(V{}, 50.0), InputError);
  CHECK_THROWS_AS(percentile(V{1}, 101.0), InputError);
}
