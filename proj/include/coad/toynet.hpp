#pragma once

// Small fully connected networks with hand-written backpropagation and
// per-layer freezing. A frozen randomly initialized network plays the
// teacher; a trainable one of the same shape plays the student.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace coad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { Identity, Relu, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct Layer {
  Matrix weights;  // out_dim x in_dim
  Vector bias;     // out_dim
  Activation activation = Activation::Identity;
  bool frozen = false;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }

  /// Exact (bitwise-value) equality of shapes, parameters and flags.
  bool operator==(const Layer& o) const {
    return activation == o.activation && frozen == o.frozen && weights.rows() == o.weights.rows() &&
           weights.cols() == o.weights.cols() && bias.size() == o.bias.size() && weights == o.weights &&
           bias == o.bias;
  }
};

class ToyNetwork {
public:
  /// Throws InputError on an empty list, mismatched chaining or
  /// non-finite parameters.
  explicit ToyNetwork(std::vector<Layer> layers);

  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const std::vector<Layer>& layers() const { return layers_; }

  bool is_frozen(std::size_t i) const { return layers_.at(i).frozen; }
  void freeze(std::size_t i) { layers_.at(i).frozen = true; }
  void freeze_all();

  bool operator==(const ToyNetwork&) const = default;

private:
  std::vector<Layer> layers_;
};

/// Random network with layer sizes dims[0] -> dims[1] -> ... -> dims.back().
/// Weights ~ N(0, 1 / fan_in); biases zero except `output_bias` added to the
/// last layer.
ToyNetwork make_random_network(std::span<const std::size_t> dims, Activation hidden,
                               Activation output, std::uint64_t seed, double output_bias = 0.0);

Vector forward(const ToyNetwork& net, const Vector& x);

/// Mean squared error over output dimensions.
double mse_loss(const ToyNetwork& net, const Vector& x, const Vector& target);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  explicit Gradients(const ToyNetwork& net);
  void scale(double factor);
};

/// Adds d(mse)/d(params) for one sample into `grads`; returns the loss.
double accumulate_gradients(const ToyNetwork& net, const Vector& x, const Vector& target,
                            Gradients& grads);

/// Plain gradient descent on every unfrozen layer. Frozen layers are not
/// touched at all.
void apply_gradients(ToyNetwork& net, const Gradients& grads, double learning_rate);

/// One SGD step on a single sample; returns the loss before the step.
/// Throws DivergenceError on a non-finite loss.
double backward_and_step(ToyNetwork& net, const Vector& x, const Vector& target,
                         double learning_rate);

/// One SGD step on the batch-mean loss; returns that mean loss.
double train_batch(ToyNetwork& net, std::span<const Vector> inputs, std::span<const Vector> targets,
                   double learning_rate);

struct NoiseSpec {
  double sigma_noise = 0.5;
  std::uint64_t seed = 0;
};

/// features + eps with eps ~ N(0, sigma_noise^2), drawn from a generator
/// seeded by spec.seed.
Vector inject_gaussian_noise(const Vector& features, const NoiseSpec& spec);
Vector inject_gaussian_noise(const Vector& features, double sigma_noise, std::mt19937_64& rng);

enum class ScoreRule { MeanAbsolute, MeanSquared };

/// Teacher/student discrepancy as a scalar anomaly score.
double anomaly_map(const Vector& teacher_out, const Vector& student_out,
                   ScoreRule rule = ScoreRule::MeanAbsolute);

/// Worst relative error between backprop gradients and central differences
/// over every parameter. Relative error is |g - fd| / max(|g|, |fd|, 1e-6).
double finite_difference_gradcheck(const ToyNetwork& net, const Vector& x, const Vector& target,
                                   double epsilon);

// Checkpoint format (JSON):
//   {"format": "coad-toynet-v1",
//    "input_dim": n, "output_dim": m,
//    "layers": [{"in_dim": i, "out_dim": o, "activation": "identity|relu|tanh",
//                "frozen": bool, "weights": [o*i values, row-major], "bias": [o values]}, ...]}
nlohmann::ordered_json to_json(const ToyNetwork& net);
ToyNetwork network_from_json(const nlohmann::ordered_json& j);
void save_checkpoint(const ToyNetwork& net, const std::filesystem::path& path);
ToyNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace coad
