#include "coad/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "coad/error.hpp"

namespace coad {

namespace {

Vector activate(const Vector& z, Activation a) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

// Derivative expressed through the pre-activation z and activation value y.
Vector activation_derivative(const Vector& z, const Vector& y, Activation a) {
  switch (a) {
    case Activation::Identity: return Vector::Ones(z.size());
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - y.array().square()).matrix();
  }
  return Vector::Ones(z.size());
}

void require_dim(const Vector& v, std::size_t expected, const char* what) {
  if (static_cast<std::size_t>(v.size()) != expected) {
    throw InputError(std::string(what) + " has dimension " + std::to_string(v.size()) + ", expected " +
                     std::to_string(expected));
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw InputError("unknown activation '" + std::string(s) + "'");
}

ToyNetwork::ToyNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InputError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weights.size() == 0) throw InputError("layer " + std::to_string(i) + " is empty");
    if (static_cast<std::size_t>(l.bias.size()) != l.out_dim()) {
      throw InputError("layer " + std::to_string(i) + " bias does not match its output dimension");
    }
    if (i > 0 && l.in_dim() != layers_[i - 1].out_dim()) {
      throw InputError("layer " + std::to_string(i) + " input dimension does not chain");
    }
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw InputError("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

std::size_t ToyNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void ToyNetwork::freeze_all() {
  for (auto& l : layers_) l.frozen = true;
}

ToyNetwork make_random_network(std::span<const std::size_t> dims, Activation hidden,
                               Activation output, std::uint64_t seed, double output_bias) {
  if (dims.size() < 2) throw InputError("network needs at least an input and an output size");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(dims[i]);
    const auto out = static_cast<Eigen::Index>(dims[i + 1]);
    std::normal_distribution<double> init(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    Layer l;
    l.weights = Matrix::NullaryExpr(out, in, [&]() { return init(rng); });
    l.bias = Vector::Zero(out);
    l.activation = i + 2 == dims.size() ? output : hidden;
    layers.push_back(std::move(l));
  }
  layers.back().bias.array() += output_bias;
  return ToyNetwork(std::move(layers));
}

Vector forward(const ToyNetwork& net, const Vector& x) {
  require_dim(x, net.input_dim(), "network input");
  Vector a = x;
  for (const auto& l : net.layers()) a = activate(l.weights * a + l.bias, l.activation);
  return a;
}

double mse_loss(const ToyNetwork& net, const Vector& x, const Vector& target) {
  require_dim(target, net.output_dim(), "training target");
  return (forward(net, x) - target).squaredNorm() / static_cast<double>(target.size());
}

Gradients::Gradients(const ToyNetwork& net) {
  for (const auto& l : net.layers()) {
    weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    bias.push_back(Vector::Zero(l.bias.size()));
  }
}

void Gradients::scale(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : bias) b *= factor;
}

double accumulate_gradients(const ToyNetwork& net, const Vector& x, const Vector& target,
                            Gradients& grads) {
  require_dim(x, net.input_dim(), "network input");
  require_dim(target, net.output_dim(), "training target");
  const std::size_t n = net.layer_count();

  // inputs[i] feeds layer i; pre[i] / post[i] are its pre- and post-activation.
  std::vector<Vector> inputs(n);
  std::vector<Vector> pre(n);
  std::vector<Vector> post(n);
  Vector a = x;
  for (std::size_t i = 0; i < n; ++i) {
    const Layer& l = net.layer(i);
    inputs[i] = a;
    pre[i] = l.weights * a + l.bias;
    post[i] = activate(pre[i], l.activation);
    a = post[i];
  }

  const Vector residual = a - target;
  const double m = static_cast<double>(target.size());
  const double loss = residual.squaredNorm() / m;

  Vector upstream = (2.0 / m) * residual;
  for (std::size_t i = n; i-- > 0;) {
    const Layer& l = net.layer(i);
    const Vector delta = upstream.cwiseProduct(activation_derivative(pre[i], post[i], l.activation));
    grads.weights[i].noalias() += delta * inputs[i].transpose();
    grads.bias[i] += delta;
    if (i > 0) upstream = l.weights.transpose() * delta;
  }
  return loss;
}

void apply_gradients(ToyNetwork& net, const Gradients& grads, double learning_rate) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    Layer& l = net.layer(i);
    if (l.frozen) continue;
    l.weights.noalias() -= learning_rate * grads.weights[i];
    l.bias.noalias() -= learning_rate * grads.bias[i];
  }
}

double backward_and_step(ToyNetwork& net, const Vector& x, const Vector& target,
                         double learning_rate) {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  Gradients g(net);
  const double loss = accumulate_gradients(net, x, target, g);
  if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss");
  apply_gradients(net, g, learning_rate);
  return loss;
}

double train_batch(ToyNetwork& net, std::span<const Vector> inputs, std::span<const Vector> targets,
                   double learning_rate) {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw InputError("batch inputs and targets must be non-empty and of equal length");
  }
  Gradients g(net);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) loss += accumulate_gradients(net, inputs[i], targets[i], g);
  const double inv = 1.0 / static_cast<double>(inputs.size());
  loss *= inv;
  if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss");
  g.scale(inv);
  apply_gradients(net, g, learning_rate);
  return loss;
}

Vector inject_gaussian_noise(const Vector& features, double sigma_noise, std::mt19937_64& rng) {
  if (!(sigma_noise > 0.0)) throw InputError("noise standard deviation must be positive");
  if (!features.allFinite()) throw InputError("features contain non-finite values");
  std::normal_distribution<double> noise(0.0, sigma_noise);
  Vector out = features;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += noise(rng);
  return out;
}

Vector inject_gaussian_noise(const Vector& features, const NoiseSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  return inject_gaussian_noise(features, spec.sigma_noise, rng);
}

double anomaly_map(const Vector& teacher_out, const Vector& student_out, ScoreRule rule) {
  if (teacher_out.size() != student_out.size()) {
    throw InputError("teacher and student outputs differ in dimension");
  }
  if (teacher_out.size() == 0) throw InputError("empty feature vectors");
  const auto diff = (teacher_out - student_out).array();
  const double n = static_cast<double>(teacher_out.size());
  return rule == ScoreRule::MeanAbsolute ? diff.abs().sum() / n : diff.square().sum() / n;
}

double finite_difference_gradcheck(const ToyNetwork& net, const Vector& x, const Vector& target,
                                   double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw InputError("gradcheck epsilon must lie in (0, 1e-3]");
  Gradients analytic(net);
  accumulate_gradients(net, x, target, analytic);

  ToyNetwork probe = net;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + epsilon;
    const double up = mse_loss(probe, x, target);
    param = saved - epsilon;
    const double down = mse_loss(probe, x, target);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(grad), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(grad - numeric) / scale);
  };
  for (std::size_t i = 0; i < probe.layer_count(); ++i) {
    Layer& l = probe.layer(i);
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) check(l.weights(r, c), analytic.weights[i](r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) check(l.bias[r], analytic.bias[i][r]);
  }
  return worst;
}

nlohmann::ordered_json to_json(const ToyNetwork& net) {
  nlohmann::ordered_json j;
  j["format"] = "coad-toynet-v1";
  j["input_dim"] = net.input_dim();
  j["output_dim"] = net.output_dim();
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : net.layers()) {
    nlohmann::ordered_json lj;
    lj["in_dim"] = l.in_dim();
    lj["out_dim"] = l.out_dim();
    lj["activation"] = to_string(l.activation);
    lj["frozen"] = l.frozen;
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    lj["weights"] = w;
    lj["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

ToyNetwork network_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != "coad-toynet-v1") throw InputError("unsupported checkpoint format");
    std::vector<Layer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto in = lj.at("in_dim").get<Eigen::Index>();
      const auto out = lj.at("out_dim").get<Eigen::Index>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out) {
        throw InputError("checkpoint layer sizes disagree with its dimensions");
      }
      Layer l;
      l.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          w.data(), out, in);
      l.bias = Eigen::Map<const Vector>(b.data(), out);
      l.activation = activation_from_string(lj.at("activation").get<std::string>());
      l.frozen = lj.at("frozen").get<bool>();
      layers.push_back(std::move(l));
    }
    ToyNetwork net(std::move(layers));
    if (net.input_dim() != j.at("input_dim").get<std::size_t>() ||
        net.output_dim() != j.at("output_dim").get<std::size_t>()) {
      throw InputError("checkpoint input/output dimensions disagree with its layers");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ToyNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out << to_json(net).dump() << '\n';
}

ToyNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  const auto j = nlohmann::ordered_json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError("checkpoint " + path.string() + " is not valid JSON");
  return network_from_json(j);
}

}  // namespace coad
