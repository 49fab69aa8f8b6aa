#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "coad/error.hpp"
#include "coad/toynet.hpp"

using namespace coad;

namespace {

Layer dense(Matrix w, Vector b, Activation a) {
  Layer l;
  l.weights = std::move(w);
  l.bias = std::move(b);
  l.activation = a;
  return l;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Vector random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return Vector::NullaryExpr(static_cast<Eigen::Index>(n), [&]() { return nd(rng); });
}

}  // namespace

TEST_CASE("forward") {
  const ToyNetwork identity({dense(Matrix::Identity(3, 3), Vector::Zero(3), Activation::Identity)});
  const Vector x = vec({1.0, -2.0, 3.5});
  CHECK(forward(identity, x) == x);

  const ToyNetwork zeros({dense(Matrix::Zero(4, 3), Vector::Zero(4), Activation::Relu),
                          dense(Matrix::Zero(2, 4), Vector::Zero(2), Activation::Relu)});
  CHECK(forward(zeros, x) == Vector::Zero(2));

  // Layer 1: W = [[1, 2], [-1, 1]], b = (0.5, 0.5), relu -> on (1, 0): relu(1.5, -0.5) = (1.5, 0)
  // Layer 2: W = [[2, -1]], b = (0.25), identity -> 3.25
  Matrix w1(2, 2);
  w1 << 1, 2, -1, 1;
  Matrix w2(1, 2);
  w2 << 2, -1;
  const ToyNetwork two({dense(w1, vec({0.5, 0.5}), Activation::Relu), dense(w2, vec({0.25}), Activation::Identity)});
  CHECK(forward(two, vec({1.0, 0.0}))[0] == 3.25);

  CHECK_THROWS_AS(forward(two, vec({1.0})), InputError);
  CHECK_THROWS_AS(ToyNetwork({dense(w1, vec({0, 0}), Activation::Relu), dense(Matrix::Zero(1, 3), vec({0}), Activation::Relu)}),
                  InputError);
  CHECK_THROWS_AS(ToyNetwork(std::vector<Layer>{}), InputError);
}

TEST_CASE("backward_and_step") {
  SUBCASE("scalar linear hand gradient") {
    ToyNetwork net({dense(Matrix::Ones(1, 1), Vector::Zero(1), Activation::Identity)});
    const double loss = backward_and_step(net, vec({1.0}), vec({0.0}), 0.1);
    CHECK(loss == 1.0);
    CHECK(net.layer(0).weights(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(net.layer(0).bias[0] == doctest::Approx(-0.2).epsilon(1e-15));
  }
  SUBCASE("zero loss leaves parameters unchanged") {
    std::mt19937_64 rng(1);
    const std::size_t dims[] = {4, 6, 3};
    ToyNetwork net = make_random_network(dims, Activation::Tanh, Activation::Identity, 5);
    const ToyNetwork before = net;
    const Vector x = random_vector(rng, 4);
    CHECK(backward_and_step(net, x, forward(net, x), 0.5) == 0.0);
    CHECK(net == before);
  }
  SUBCASE("all layers frozen") {
    std::mt19937_64 rng(2);
    const std::size_t dims[] = {4, 6, 3};
    ToyNetwork net = make_random_network(dims, Activation::Tanh, Activation::Identity, 5);
    net.freeze_all();
    const ToyNetwork before = net;
    CHECK(backward_and_step(net, random_vector(rng, 4), random_vector(rng, 3), 0.5) > 0.0);
    CHECK(net == before);
  }
  SUBCASE("errors") {
    ToyNetwork net({dense(Matrix::Ones(1, 1), Vector::Zero(1), Activation::Identity)});
    CHECK_THROWS_AS(backward_and_step(net, vec({1.0}), vec({0.0}), 0.0), InputError);
    CHECK_THROWS_AS(backward_and_step(net, vec({1.0}), vec({0.0, 1.0}), 0.1), InputError);
    CHECK_THROWS_AS(backward_and_step(net, vec({1e300}), vec({-1e300}), 0.1), DivergenceError);
  }
}

TEST_CASE("freeze isolation under continued training") {
  std::mt19937_64 rng(8);
  const std::size_t dims[] = {5, 8, 8, 5};
  ToyNetwork net = make_random_network(dims, Activation::Tanh, Activation::Identity, 21);
  const ToyNetwork teacher = make_random_network(dims, Activation::Tanh, Activation::Identity, 22);
  net.freeze(0);
  const Layer frozen = net.layer(0);
  const Layer free_before = net.layer(2);
  for (int step = 0; step < 100; ++step) {
    const Vector x = random_vector(rng, 5);
    backward_and_step(net, x, forward(teacher, x), 0.05);
  }
  CHECK(net.layer(0) == frozen);
  CHECK_FALSE(net.layer(2) == free_before);
}

TEST_CASE("train_batch averages gradients") {
  std::mt19937_64 rng(4);
  const std::size_t dims[] = {3, 4, 2};
  ToyNetwork a = make_random_network(dims, Activation::Tanh, Activation::Identity, 9);
  ToyNetwork b = a;
  const std::vector<Vector> xs{random_vector(rng, 3), random_vector(rng, 3)};
  const std::vector<Vector> ts{random_vector(rng, 2), random_vector(rng, 2)};

  Gradients g(b);
  const double l0 = accumulate_gradients(b, xs[0], ts[0], g);
  const double l1 = accumulate_gradients(b, xs[1], ts[1], g);
  g.scale(0.5);
  apply_gradients(b, g, 0.1);

  CHECK(train_batch(a, xs, ts, 0.1) == doctest::Approx(0.5 * (l0 + l1)));
  for (std::size_t i = 0; i < a.layer_count(); ++i) CHECK(a.layer(i).weights.isApprox(b.layer(i).weights, 1e-14));
  CHECK_THROWS_AS(train_batch(a, xs, std::span<const Vector>(ts).first(1), 0.1), InputError);
}

TEST_CASE("inject_gaussian_noise") {
  const Vector x = Vector::Zero(100000);
  const NoiseSpec spec{0.3, 77};
  const Vector a = inject_gaussian_noise(x, spec);
  CHECK(a == inject_gaussian_noise(x, spec));
  CHECK_FALSE(a == inject_gaussian_noise(x, NoiseSpec{0.3, 78}));

  const double n = static_cast<double>(a.size());
  const double mean = a.mean();
  const double sd = std::sqrt((a.array() - mean).square().sum() / (n - 1.0));
  CHECK(std::abs(mean) < 4.0 * 0.3 / std::sqrt(n));
  CHECK(std::abs(sd - 0.3) < 0.02 * 0.3);

  CHECK_THROWS_AS(inject_gaussian_noise(x, NoiseSpec{0.0, 1}), InputError);
  CHECK_THROWS_AS(inject_gaussian_noise(vec({NAN}), spec), InputError);
}

TEST_CASE("anomaly_map") {
  CHECK(anomaly_map(vec({1, 2}), vec({1, 2})) == 0.0);
  CHECK(anomaly_map(vec({1, 1}), vec({0, 0})) == 1.0);
  CHECK(anomaly_map(vec({2, 0}), vec({0, 1})) == 1.5);
  CHECK(anomaly_map(vec({2, 0}), vec({0, 1}), ScoreRule::MeanSquared) == 2.5);
  CHECK_THROWS_AS(anomaly_map(vec({1}), vec({1, 2})), InputError);
}

TEST_CASE("finite-difference gradcheck") {
  std::mt19937_64 rng(31);
  SUBCASE("linear") {
    for (int seed = 0; seed < 20; ++seed) {
      const std::size_t dims[] = {4, 5, 3};
      const ToyNetwork net = make_random_network(dims, Activation::Identity, Activation::Identity, seed);
      CHECK(finite_difference_gradcheck(net, random_vector(rng, 4), random_vector(rng, 3), 1e-5) < 1e-7);
    }
  }
  SUBCASE("tanh") {
    for (int seed = 0; seed < 20; ++seed) {
      const std::size_t dims[] = {4, 6, 6, 3};
      const ToyNetwork net = make_random_network(dims, Activation::Tanh, Activation::Tanh, seed);
      CHECK(finite_difference_gradcheck(net, random_vector(rng, 4), random_vector(rng, 3), 1e-5) < 1e-4);
    }
  }
  SUBCASE("relu with inputs away from kinks") {
    int checked = 0;
    for (int seed = 0; checked < 20; ++seed) {
      const std::size_t dims[] = {4, 6, 3};
      const ToyNetwork net = make_random_network(dims, Activation::Relu, Activation::Identity, seed);
      const Vector x = random_vector(rng, 4);
      const Vector pre = net.layer(0).weights * x + net.layer(0).bias;
      if (pre.cwiseAbs().minCoeff() < 1e-2) continue;
      ++checked;
      CHECK(finite_difference_gradcheck(net, x, random_vector(rng, 3), 1e-5) < 1e-4);
    }
  }
  const std::size_t dims[] = {2, 2};
  const ToyNetwork net = make_random_network(dims, Activation::Identity, Activation::Identity, 1);
  CHECK_THROWS_AS(finite_difference_gradcheck(net, vec({1, 1}), vec({0, 0}), 1e-2), InputError);
}

TEST_CASE("checkpoint JSON round trip") {
  const std::size_t dims[] = {3, 5, 2};
  ToyNetwork net = make_random_network(dims, Activation::Relu, Activation::Tanh, 13, 0.5);
  net.freeze(0);
  const auto j = to_json(net);
  CHECK(j["format"] == "coad-toynet-v1");
  CHECK(j["layers"][0]["weights"].size() == 15);
  CHECK(j["layers"][0]["weights"][1].get<double>() == net.layer(0).weights(0, 1));
  CHECK(network_from_json(j) == net);

  const auto path = std::filesystem::temp_directory_path() / "coad_toynet_roundtrip.json";
  save_checkpoint(net, path);
  CHECK(load_checkpoint(path) == net);
  std::filesystem::remove(path);

  auto broken = j;
  broken["layers"][0]["bias"] = std::vector<double>{1.0};
  CHECK_THROWS_AS(network_from_json(broken), InputError);
}
