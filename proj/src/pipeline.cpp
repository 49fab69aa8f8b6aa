#include "coad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "coad/error.hpp"
#include "coad/metrics.hpp"
#include "coad/seed.hpp"

namespace coad {

namespace {

constexpr std::size_t kBlobRank = 3;
constexpr double kCenterSpread = 3.0;
constexpr double kBlobAxisScale = 0.5;
constexpr double kOffManifoldNoise = 0.05;

std::size_t to_count(const KeyValues& kv, std::string_view key, std::size_t fallback) {
  const std::int64_t v = kv_int(kv, key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError(std::string(key), "config key '" + std::string(key) + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<Vector> forward_all(const ToyNetwork& net, std::span<const Vector> xs) {
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(forward(net, x));
  return out;
}

std::vector<double> score_against(std::span<const Vector> teacher_out, const ToyNetwork& student,
                                  std::span<const Vector> xs, ScoreRule rule) {
  std::vector<double> scores;
  scores.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) scores.push_back(anomaly_map(teacher_out[i], forward(student, xs[i]), rule));
  return scores;
}

// Teacher features are fixed for the whole run; cache them per split.
struct TeacherCache {
  std::vector<Vector> eval;
  std::vector<Vector> pseudo;
  std::vector<Vector> anomaly;
};

TeacherCache teacher_cache(const TrainingRun& run) {
  return {forward_all(run.teacher, run.data.normal_eval), forward_all(run.teacher, run.pseudo_anomaly_eval),
          forward_all(run.teacher, run.data.anomaly_eval)};
}

Evaluation evaluate_cached(const TrainingRun& run, const TeacherCache& cache) {
  const ScoreRule rule = run.config.score_rule;
  std::vector<double> predicted;
  std::vector<double> truth;
  predicted.reserve(run.teacher_train.size() * kFeatureDim);
  truth.reserve(run.teacher_train.size() * kFeatureDim);
  for (std::size_t i = 0; i < run.data.normal_train.size(); ++i) {
    const Vector s = forward(run.student, run.data.normal_train[i]);
    predicted.insert(predicted.end(), s.data(), s.data() + s.size());
    truth.insert(truth.end(), run.teacher_train[i].data(), run.teacher_train[i].data() + run.teacher_train[i].size());
  }
  const auto normal = score_against(cache.eval, run.student, run.data.normal_eval, rule);
  const auto pseudo = score_against(cache.pseudo, run.student, run.pseudo_anomaly_eval, rule);
  const auto anomaly = score_against(cache.anomaly, run.student, run.data.anomaly_eval, rule);

  Evaluation e;
  e.arq = compute_arq(predicted, truth);
  e.radi_eval = radi_empirical(normal, pseudo);
  e.radi_heldout = radi_empirical(normal, anomaly);
  e.auroc_heldout = auroc(normal, anomaly);
  return e;
}

std::vector<std::size_t> frozen_indices(const ToyNetwork& net) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    if (net.is_frozen(i)) out.push_back(i);
  }
  return out;
}

// One pass over the training normals. Each batch pairs every clean sample with
// a noised copy; both are regressed onto the clean teacher features.
double train_epoch(TrainingRun& run, double learning_rate) {
  const auto& train = run.data.normal_train;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), run.rng);

  double loss_sum = 0.0;
  std::size_t batches = 0;
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
  for (std::size_t start = 0; start < order.size(); start += run.config.batch_size) {
    const std::size_t end = std::min(order.size(), start + run.config.batch_size);
    inputs.clear();
    targets.clear();
    for (std::size_t j = start; j < end; ++j) {
      inputs.push_back(train[order[j]]);
      targets.push_back(run.teacher_train[order[j]]);
    }
    for (std::size_t j = start; j < end; ++j) {
      inputs.push_back(inject_gaussian_noise(train[order[j]], run.config.noise_sigma, run.rng));
      targets.push_back(run.teacher_train[order[j]]);
    }
    const double loss = train_batch(run.student, inputs, targets, learning_rate);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite loss at step " + std::to_string(run.step));
    loss_sum += loss;
    ++batches;
    ++run.step;
  }
  return loss_sum / static_cast<double>(batches);
}

bool is_checkpoint(std::size_t epoch, std::size_t total, std::size_t every) {
  return epoch % every == 0 || epoch == total;
}

nlohmann::ordered_json evaluation_json(const Evaluation& e) {
  nlohmann::ordered_json j;
  j["arq"] = e.arq;
  j["radi"] = e.radi_eval;
  j["radi_heldout"] = e.radi_heldout;
  j["auroc_heldout"] = e.auroc_heldout;
  return j;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.standard_epochs < 1) throw InputError("standard_epochs must be at least 1");
  if (c.overfit_epochs < 1) throw InputError("overfit_epochs must be at least 1");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) throw InputError("learning_rate must be positive");
  if (!(c.noise_sigma > 0.0)) throw InputError("noise_sigma must be positive");
  validate(c.interval);
  if (c.c_thr < 1) throw InputError("c_thr must be a positive integer");
  if (c.gradient_window < 2) throw InputError("gradient_window must be at least 2");
  if (c.batch_size < 1) throw InputError("batch_size must be at least 1");
  if (c.n_train < 10 || c.n_eval < 10) throw InputError("n_train and n_eval must be at least 10");
  if (!(c.anomaly_shift > 0.0)) throw InputError("anomaly_shift must be positive");
  if (!(c.percentile >= 0.0 && c.percentile <= 100.0)) throw InputError("percentile must lie in [0, 100]");
  if (c.checkpoint_every < 1) throw InputError("checkpoint_every must be at least 1");
  if (c.hidden_width < 1) throw InputError("hidden_width must be at least 1");
  if (c.student_layers < 2) throw InputError("student_layers must be at least 2");
  if (!std::isfinite(c.teacher_offset)) throw InputError("teacher_offset must be finite");
}

std::vector<std::string> train_config_keys() {
  return {"standard_epochs", "overfit_epochs", "learning_rate", "noise_sigma",      "arq_theta",
          "arq_delta",       "c_thr",          "gradient_window", "seed",           "batch_size",
          "n_train",         "n_eval",         "anomaly_shift",  "percentile",       "checkpoint_every",
          "hidden_width",    "student_layers", "teacher_offset", "score_rule"};
}

TrainConfig train_config_from_key_values(const KeyValues& kv, const TrainConfig& base) {
  const auto keys = train_config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(key, "unknown configuration key '" + key + "'");
    }
  }
  TrainConfig c = base;
  c.standard_epochs = to_count(kv, "standard_epochs", c.standard_epochs);
  c.overfit_epochs = to_count(kv, "overfit_epochs", c.overfit_epochs);
  c.learning_rate = kv_double(kv, "learning_rate", c.learning_rate);
  c.noise_sigma = kv_double(kv, "noise_sigma", c.noise_sigma);
  c.interval.theta = kv_double(kv, "arq_theta", c.interval.theta);
  c.interval.delta = kv_double(kv, "arq_delta", c.interval.delta);
  c.c_thr = static_cast<int>(kv_int(kv, "c_thr", c.c_thr));
  c.gradient_window = to_count(kv, "gradient_window", c.gradient_window);
  c.seed = static_cast<std::uint64_t>(kv_int(kv, "seed", static_cast<std::int64_t>(c.seed)));
  c.batch_size = to_count(kv, "batch_size", c.batch_size);
  c.n_train = to_count(kv, "n_train", c.n_train);
  c.n_eval = to_count(kv, "n_eval", c.n_eval);
  c.anomaly_shift = kv_double(kv, "anomaly_shift", c.anomaly_shift);
  c.percentile = kv_double(kv, "percentile", c.percentile);
  c.checkpoint_every = to_count(kv, "checkpoint_every", c.checkpoint_every);
  c.hidden_width = to_count(kv, "hidden_width", c.hidden_width);
  c.student_layers = to_count(kv, "student_layers", c.student_layers);
  c.teacher_offset = kv_double(kv, "teacher_offset", c.teacher_offset);
  const std::string rule = kv_string(kv, "score_rule", c.score_rule == ScoreRule::MeanAbsolute ? "l1" : "l2");
  if (rule == "l1") {
    c.score_rule = ScoreRule::MeanAbsolute;
  } else if (rule == "l2") {
    c.score_rule = ScoreRule::MeanSquared;
  } else {
    throw ConfigError("score_rule", "config key 'score_rule' must be l1 or l2, got '" + rule + "'");
  }
  return c;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["standard_epochs"] = c.standard_epochs;
  j["overfit_epochs"] = c.overfit_epochs;
  j["learning_rate"] = c.learning_rate;
  j["noise_sigma"] = c.noise_sigma;
  j["arq_theta"] = c.interval.theta;
  j["arq_delta"] = c.interval.delta;
  j["c_thr"] = c.c_thr;
  j["gradient_window"] = c.gradient_window;
  j["seed"] = c.seed;
  j["batch_size"] = c.batch_size;
  j["n_train"] = c.n_train;
  j["n_eval"] = c.n_eval;
  j["anomaly_shift"] = c.anomaly_shift;
  j["percentile"] = c.percentile;
  j["checkpoint_every"] = c.checkpoint_every;
  j["hidden_width"] = c.hidden_width;
  j["student_layers"] = c.student_layers;
  j["teacher_offset"] = c.teacher_offset;
  j["score_rule"] = c.score_rule == ScoreRule::MeanAbsolute ? "l1" : "l2";
  return j;
}

SyntheticDataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_eval,
                                        double anomaly_shift) {
  if (n_train < 10 || n_eval < 10) throw InputError("dataset counts must be at least 10");
  if (!(anomaly_shift > 0.0)) throw InputError("anomaly_shift must be positive");

  std::mt19937_64 rng(derive_seed(seed, "dataset"));
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(kFeatureDim);

  SyntheticDataset d;
  std::vector<Matrix> axes;
  for (std::size_t b = 0; b < kBlobCount; ++b) {
    d.centers.push_back(Vector::NullaryExpr(dim, [&]() { return kCenterSpread * unit(rng); }));
    axes.push_back(Matrix::NullaryExpr(dim, static_cast<Eigen::Index>(kBlobRank),
                                       [&]() { return kBlobAxisScale * unit(rng); }));
  }
  d.shift_direction = Vector::NullaryExpr(dim, [&]() { return unit(rng); }).normalized();

  std::uniform_int_distribution<std::size_t> pick(0, kBlobCount - 1);
  auto draw = [&]() {
    const std::size_t b = pick(rng);
    const Vector latent = Vector::NullaryExpr(static_cast<Eigen::Index>(kBlobRank), [&]() { return unit(rng); });
    const Vector jitter = Vector::NullaryExpr(dim, [&]() { return kOffManifoldNoise * unit(rng); });
    return Vector(d.centers[b] + axes[b] * latent + jitter);
  };
  for (std::size_t i = 0; i < n_train; ++i) d.normal_train.push_back(draw());
  for (std::size_t i = 0; i < n_eval; ++i) d.normal_eval.push_back(draw());
  for (std::size_t i = 0; i < n_eval; ++i) d.anomaly_eval.push_back(draw() + anomaly_shift * d.shift_direction);
  return d;
}

void write_dataset_csv(std::ostream& out, const SyntheticDataset& d) {
  out << "split,label";
  for (std::size_t i = 0; i < kFeatureDim; ++i) out << ",x" << i;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  auto rows = [&](const std::vector<Vector>& xs, const char* split, int label) {
    for (const auto& x : xs) {
      out << split << ',' << label;
      for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << x[i];
      out << '\n';
    }
  };
  rows(d.normal_train, "train", 0);
  rows(d.normal_eval, "eval", 0);
  rows(d.anomaly_eval, "eval", 1);
}

std::string_view to_string(Stage s) { return s == Stage::Standard ? "standard" : "overfit"; }

std::string_view to_string(StopReason r) {
  return r == StopReason::Completed ? "completed" : "layers_exhausted";
}

TrainingRun prepare_run(const TrainConfig& config) {
  validate(config);
  SyntheticDataset data = make_synthetic_dataset(config.seed, config.n_train, config.n_eval, config.anomaly_shift);

  std::vector<std::size_t> teacher_dims{kFeatureDim};
  std::vector<std::size_t> student_dims{kFeatureDim};
  for (std::size_t i = 0; i + 1 < config.student_layers; ++i) {
    teacher_dims.push_back(2 * config.hidden_width);
    student_dims.push_back(config.hidden_width);
  }
  teacher_dims.push_back(kFeatureDim);
  student_dims.push_back(kFeatureDim);

  ToyNetwork teacher = make_random_network(teacher_dims, Activation::Tanh, Activation::Identity,
                                           derive_seed(config.seed, "teacher"), config.teacher_offset);
  teacher.freeze_all();
  ToyNetwork student = make_random_network(student_dims, Activation::Tanh, Activation::Identity,
                                           derive_seed(config.seed, "student"), config.teacher_offset);

  std::vector<Vector> teacher_train = forward_all(teacher, data.normal_train);
  std::mt19937_64 pseudo_rng(derive_seed(config.seed, "pseudo-anomaly-eval"));
  std::vector<Vector> pseudo;
  pseudo.reserve(data.normal_eval.size());
  for (const auto& x : data.normal_eval) pseudo.push_back(inject_gaussian_noise(x, config.noise_sigma, pseudo_rng));

  return TrainingRun{config,
                     std::move(data),
                     std::move(teacher),
                     std::move(student),
                     std::move(teacher_train),
                     std::move(pseudo),
                     std::mt19937_64(derive_seed(config.seed, "training")),
                     0,
                     false};
}

Evaluation evaluate(const TrainingRun& run) { return evaluate_cached(run, teacher_cache(run)); }

RunLog run_standard_stage(TrainingRun& run) {
  const TrainConfig& cfg = run.config;
  const TeacherCache cache = teacher_cache(run);
  RunLog log;
  for (std::size_t epoch = 1; epoch <= cfg.standard_epochs; ++epoch) {
    const double loss = train_epoch(run, cfg.learning_rate);
    if (!is_checkpoint(epoch, cfg.standard_epochs, cfg.checkpoint_every)) continue;
    const Evaluation e = evaluate_cached(run, cache);
    CheckpointRecord r;
    r.stage = Stage::Standard;
    r.epoch = epoch;
    r.step = run.step;
    r.learning_rate = cfg.learning_rate;
    r.loss = loss;
    r.arq = e.arq;
    r.radi_eval = e.radi_eval;
    r.radi_heldout = e.radi_heldout;
    r.frozen_layers = frozen_indices(run.student);
    log.records.push_back(std::move(r));
  }
  run.standard_done = true;
  return log;
}

RunLog run_overfit_stage(TrainingRun& run, ControllerState& controller) {
  if (!run.standard_done) throw std::logic_error("overfitting stage requires a completed standard stage");
  const TrainConfig& cfg = run.config;
  const double overfit_lr = cfg.learning_rate / 10.0;
  const TeacherCache cache = teacher_cache(run);
  RunLog log;
  for (std::size_t epoch = 1; epoch <= cfg.overfit_epochs; ++epoch) {
    const double loss = train_epoch(run, overfit_lr);
    if (!is_checkpoint(epoch, cfg.overfit_epochs, cfg.checkpoint_every)) continue;
    const Evaluation e = evaluate_cached(run, cache);

    CheckpointRecord r;
    r.stage = Stage::Overfit;
    r.epoch = epoch;
    r.step = run.step;
    r.learning_rate = overfit_lr;
    r.loss = loss;
    r.arq = e.arq;
    r.radi_eval = e.radi_eval;
    r.radi_heldout = e.radi_heldout;
    r.decision = dual_control_step(controller, e.arq, e.radi_eval, cfg.interval);

    bool exhausted = false;
    if (r.decision->verdict == Verdict::EmitFreezeSignal) {
      r.frozen_layer = freeze_next_layer(run.student, controller);
      exhausted = !r.frozen_layer.has_value();
    }
    r.frozen_layers = frozen_indices(run.student);
    log.records.push_back(std::move(r));
    if (exhausted) {
      log.stop = StopReason::LayersExhausted;
      break;
    }
  }
  return log;
}

std::vector<double> score_samples(const ToyNetwork& teacher, const ToyNetwork& student,
                                  std::span<const Vector> samples, ScoreRule rule) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& x : samples) scores.push_back(anomaly_map(forward(teacher, x), forward(student, x), rule));
  return scores;
}

double resolve_threshold(const ThresholdRule& rule, const ToyNetwork& teacher, const ToyNetwork& student,
                         std::span<const Vector> reference, ScoreRule score_rule) {
  if (rule.kind == ThresholdRule::Kind::Fixed) return rule.value;
  if (reference.empty()) throw InputError("percentile threshold needs reference samples");
  return percentile(score_samples(teacher, student, reference, score_rule), rule.value);
}

std::vector<InferenceResult> run_inference(const ToyNetwork& teacher, const ToyNetwork& student,
                                           std::span<const Vector> samples, double threshold,
                                           ScoreRule score_rule) {
  if (samples.empty()) throw InputError("inference needs at least one sample");
  std::vector<InferenceResult> out;
  out.reserve(samples.size());
  for (double s : score_samples(teacher, student, samples, score_rule)) out.push_back({s, s > threshold});
  return out;
}

RunResult run_experiment(const TrainConfig& config) {
  TrainingRun run = prepare_run(config);
  ControllerState controller(config.c_thr, config.gradient_window);

  RunResult result{{}, {}, run.student};
  RunLog standard = run_standard_stage(run);
  result.summary.standard_end = evaluate(run);
  RunLog overfit = run_overfit_stage(run, controller);

  result.log.records = std::move(standard.records);
  result.log.records.insert(result.log.records.end(), std::make_move_iterator(overfit.records.begin()),
                            std::make_move_iterator(overfit.records.end()));
  result.log.stop = overfit.stop;

  RunSummary& s = result.summary;
  s.final = evaluate(run);
  s.frozen_layers = frozen_indices(run.student);
  s.freeze_signals = controller.signals_emitted;
  s.checkpoints = result.log.records.size();
  s.stop = overfit.stop;
  s.threshold = resolve_threshold({ThresholdRule::Kind::Percentile, config.percentile}, run.teacher, run.student,
                                  run.data.normal_train, config.score_rule);
  auto rate = [&](const std::vector<Vector>& xs) {
    const auto res = run_inference(run.teacher, run.student, xs, s.threshold, config.score_rule);
    const auto hits = std::count_if(res.begin(), res.end(), [](const InferenceResult& r) { return r.anomalous; });
    return static_cast<double>(hits) / static_cast<double>(res.size());
  };
  s.heldout_detection_rate = rate(run.data.anomaly_eval);
  s.heldout_false_alarm_rate = rate(run.data.normal_eval);
  result.student = run.student;
  return result;
}

std::string to_jsonl(const CheckpointRecord& r) {
  nlohmann::ordered_json j;
  j["stage"] = to_string(r.stage);
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["learning_rate"] = r.learning_rate;
  j["loss"] = r.loss;
  j["arq"] = r.arq;
  j["radi_eval"] = r.radi_eval;
  j["radi_heldout"] = r.radi_heldout;
  if (r.decision && r.decision->reason.gradient_estimate) {
    j["gradient"] = *r.decision->reason.gradient_estimate;
  } else {
    j["gradient"] = nullptr;
  }
  if (r.decision) {
    j["verdict"] = to_string(r.decision->verdict);
  } else {
    j["verdict"] = nullptr;
  }
  j["frozen_layer"] = r.frozen_layer ? nlohmann::ordered_json(*r.frozen_layer) : nlohmann::ordered_json(nullptr);
  j["frozen_layers"] = r.frozen_layers;
  return j.dump();
}

void write_run_log(std::ostream& out, const RunLog& log) {
  for (const auto& r : log.records) out << to_jsonl(r) << '\n';
}

void write_decision_log(std::ostream& out, const RunLog& log) {
  for (const auto& r : log.records) {
    if (!r.decision) continue;
    out << decision_log_line(r.step, r.arq, r.radi_eval, *r.decision, r.frozen_layer) << '\n';
  }
}

nlohmann::ordered_json summary_json(const RunSummary& s, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["final_arq"] = s.final.arq;
  j["final_radi"] = s.final.radi_eval;
  j["final_radi_heldout"] = s.final.radi_heldout;
  j["final_auroc_heldout"] = s.final.auroc_heldout;
  j["standard_stage_end"] = evaluation_json(s.standard_end);
  j["frozen_layers"] = s.frozen_layers;
  j["freeze_signals"] = s.freeze_signals;
  j["checkpoints"] = s.checkpoints;
  j["threshold"] = s.threshold;
  j["heldout_detection_rate"] = s.heldout_detection_rate;
  j["heldout_false_alarm_rate"] = s.heldout_false_alarm_rate;
  j["stop_reason"] = to_string(s.stop);
  j["config"] = to_json(config);
  return j;
}

}  // namespace coad
