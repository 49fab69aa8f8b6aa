#pragma once

// Two-stage teacher/student training on synthetic data.
//
// Standard stage: the student learns to reproduce the frozen teacher's
// features on normal samples, and to map Gaussian-noised copies of them
// (pseudo-anomalies) back to the clean teacher features.
//
// Overfitting stage: same objective at one tenth of the learning rate. After
// every checkpoint the ARQ (student vs teacher features on the training set)
// and RADI (normal eval scores vs pseudo-anomaly eval scores) feed the dual
// controller, whose freeze signals freeze student layers bottom-up.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coad/controller.hpp"
#include "coad/kv_config.hpp"
#include "coad/toynet.hpp"

namespace coad {

struct TrainConfig {
  std::size_t standard_epochs = 20;
  std::size_t overfit_epochs = 20;
  double learning_rate = 0.05;
  double noise_sigma = 0.5;
  ArqInterval interval{0.006, 0.005};
  int c_thr = 3;
  std::size_t gradient_window = 5;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  std::size_t n_train = 512;
  std::size_t n_eval = 512;
  double anomaly_shift = 2.0;
  double percentile = 99.0;
  std::size_t checkpoint_every = 1;  // epochs between checkpoints
  std::size_t hidden_width = 32;
  std::size_t student_layers = 3;
  double teacher_offset = 10.0;  // added to teacher outputs so ARQ's denominator is well away from zero
  ScoreRule score_rule = ScoreRule::MeanAbsolute;
};

/// Throws InputError (epochs >= 1, learning_rate > 0, counts >= 10, ...).
void validate(const TrainConfig& config);

/// Recognized keys: standard_epochs, overfit_epochs, learning_rate,
/// noise_sigma, arq_theta, arq_delta, c_thr, gradient_window, seed,
/// batch_size, n_train, n_eval, anomaly_shift, percentile, checkpoint_every,
/// hidden_width, student_layers, teacher_offset, score_rule (l1 | l2).
TrainConfig train_config_from_key_values(const KeyValues& kv, const TrainConfig& base = {});
std::vector<std::string> train_config_keys();
nlohmann::ordered_json to_json(const TrainConfig& config);

inline constexpr std::size_t kFeatureDim = 8;
inline constexpr std::size_t kBlobCount = 3;

struct SyntheticDataset {
  std::vector<Vector> normal_train;
  std::vector<Vector> normal_eval;
  std::vector<Vector> anomaly_eval;
  std::vector<Vector> centers;  // blob means
  Vector shift_direction;       // unit vector the anomalies are translated along
};

/// Three anisotropic Gaussian blobs in 8 dimensions. Anomalies are fresh
/// blob samples translated by `anomaly_shift` along one random direction.
/// Throws InputError if a count is below 10 or the shift is not positive.
SyntheticDataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_eval,
                                        double anomaly_shift);

/// CSV `split,label,x0..x7`; split in {train, eval}, label 1 for anomalies.
void write_dataset_csv(std::ostream& out, const SyntheticDataset& data);

enum class Stage { Standard, Overfit };
std::string_view to_string(Stage s);

struct CheckpointRecord {
  Stage stage = Stage::Standard;
  std::size_t epoch = 0;  // 1-based within the stage
  std::size_t step = 0;   // SGD steps since the start of the run
  double learning_rate = 0.0;
  double loss = 0.0;  // mean batch loss over the epoch
  double arq = 0.0;
  double radi_eval = 0.0;     // normal eval vs pseudo-anomalies
  double radi_heldout = 0.0;  // normal eval vs true anomalies
  std::optional<ControlDecision> decision;  // overfit stage only
  std::optional<std::size_t> frozen_layer;
  std::vector<std::size_t> frozen_layers;
};

enum class StopReason { Completed, LayersExhausted };
std::string_view to_string(StopReason r);

struct RunLog {
  std::vector<CheckpointRecord> records;
  StopReason stop = StopReason::Completed;
};

/// Mutable state of one training run. Single owner.
struct TrainingRun {
  TrainConfig config;
  SyntheticDataset data;
  ToyNetwork teacher;
  ToyNetwork student;
  std::vector<Vector> teacher_train;      // teacher features of normal_train
  std::vector<Vector> pseudo_anomaly_eval;  // noised copies of normal_eval
  std::mt19937_64 rng;
  std::size_t step = 0;
  bool standard_done = false;
};

/// Validates the config, builds dataset, teacher and student.
TrainingRun prepare_run(const TrainConfig& config);

struct Evaluation {
  double arq = 0.0;
  double radi_eval = 0.0;
  double radi_heldout = 0.0;
  double auroc_heldout = 0.0;
};

Evaluation evaluate(const TrainingRun& run);

/// Throws DivergenceError on a non-finite loss.
RunLog run_standard_stage(TrainingRun& run);

/// Throws std::logic_error if the standard stage has not run.
RunLog run_overfit_stage(TrainingRun& run, ControllerState& controller);

struct ThresholdRule {
  enum class Kind { Percentile, Fixed } kind = Kind::Percentile;
  double value = 99.0;  // percentile p, or the fixed threshold
};

/// Fixed thresholds pass through; percentile rules take the p-th percentile
/// of anomaly scores on `reference` (normally the training normals).
double resolve_threshold(const ThresholdRule& rule, const ToyNetwork& teacher, const ToyNetwork& student,
                         std::span<const Vector> reference, ScoreRule score_rule = ScoreRule::MeanAbsolute);

struct InferenceResult {
  double score = 0.0;
  bool anomalous = false;
};

/// Score each sample by teacher/student discrepancy; anomalous iff score > threshold.
std::vector<InferenceResult> run_inference(const ToyNetwork& teacher, const ToyNetwork& student,
                                           std::span<const Vector> samples, double threshold,
                                           ScoreRule score_rule = ScoreRule::MeanAbsolute);

std::vector<double> score_samples(const ToyNetwork& teacher, const ToyNetwork& student,
                                  std::span<const Vector> samples, ScoreRule rule);

struct RunSummary {
  Evaluation standard_end;
  Evaluation final;
  std::vector<std::size_t> frozen_layers;
  std::size_t freeze_signals = 0;
  std::size_t checkpoints = 0;
  double threshold = 0.0;
  double heldout_detection_rate = 0.0;   // anomalies above threshold
  double heldout_false_alarm_rate = 0.0;  // eval normals above threshold
  StopReason stop = StopReason::Completed;
};

struct RunResult {
  RunLog log;  // both stages, in order
  RunSummary summary;
  ToyNetwork student;
};

/// Both stages plus threshold calibration and held-out evaluation.
RunResult run_experiment(const TrainConfig& config);

std::string to_jsonl(const CheckpointRecord& r);
void write_run_log(std::ostream& out, const RunLog& log);
/// Controller decision lines only (overfit-stage records).
void write_decision_log(std::ostream& out, const RunLog& log);
nlohmann::ordered_json summary_json(const RunSummary& s, const TrainConfig& config);

}  // namespace coad
