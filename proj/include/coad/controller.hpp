#pragma once

// Dual control of the overfitting stage.
//
// Each checkpoint reports (ARQ, RADI). A checkpoint is a violation when the
// ARQ leaves its target interval or when RADI is falling as ARQ moves
// (negative least-squares slope of RADI against ARQ over a sliding window).
// Violations increment a counter; non-violations reset it. Once the counter
// exceeds the threshold a freeze signal is emitted, the counter resets, and
// the caller freezes the lowest unfrozen layer.

#include <concepts>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coad {

/// Closed interval [theta - delta, theta + delta] of acceptable ARQ values.
struct ArqInterval {
  double theta = 0.006;
  double delta = 0.005;

  double lower() const { return theta - delta; }
  double upper() const { return theta + delta; }
};

/// Throws InputError unless theta > 0, delta > 0 and theta - delta >= 0.
void validate(const ArqInterval& interval);

bool arq_in_interval(double arq, const ArqInterval& interval);

struct Observation {
  double arq = 0.0;
  double radi = 0.0;
};

/// Fixed-capacity FIFO of the most recent observations.
class ObservationWindow {
public:
  explicit ObservationWindow(std::size_t capacity = 5);

  void push(Observation obs);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<Observation> snapshot() const { return {items_.begin(), items_.end()}; }

private:
  std::size_t capacity_;
  std::deque<Observation> items_;
};

struct SlopeEstimate {
  double slope = 0.0;
  bool defined = false;  // false with < 2 points or zero ARQ spread
};

/// Least-squares slope of RADI against ARQ.
SlopeEstimate estimate_radi_gradient(std::span<const Observation> window);

enum class Verdict { Continue, IncrementCounter, EmitFreezeSignal };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct ControlReason {
  bool arq_out_of_interval = false;
  bool radi_gradient_negative = false;
  std::optional<double> gradient_estimate;  // empty until the window has two distinct ARQ values
};

struct ControlDecision {
  Verdict verdict = Verdict::Continue;
  ControlReason reason;
};

struct ControllerState {
  explicit ControllerState(int threshold = 3, std::size_t window = 5);

  int freeze_counter = 0;
  int freeze_threshold;
  ObservationWindow history;
  std::vector<std::size_t> frozen_layers;
  std::size_t signals_emitted = 0;
};

ControlDecision dual_control_step(ControllerState& state, double arq, double radi,
                                  const ArqInterval& interval);

/// Anything exposing an ordered list of freezable layers.
template <typename T>
concept FreezableStack = requires(T& t, const T& ct, std::size_t i) {
  { ct.layer_count() } -> std::convertible_to<std::size_t>;
  { ct.is_frozen(i) } -> std::convertible_to<bool>;
  t.freeze(i);
};

/// Per-layer freeze flags, for callers without a network at hand.
struct FreezeFlags {
  std::vector<bool> frozen;

  std::size_t layer_count() const { return frozen.size(); }
  bool is_frozen(std::size_t i) const { return frozen.at(i); }
  void freeze(std::size_t i) { frozen.at(i) = true; }
};

/// Freezes the lowest-index unfrozen layer, records it and resets the
/// counter. Returns std::nullopt when every layer is already frozen.
template <FreezableStack Layers>
std::optional<std::size_t> freeze_next_layer(Layers& layers, ControllerState& state) {
  for (std::size_t i = 0; i < layers.layer_count(); ++i) {
    if (layers.is_frozen(i)) continue;
    layers.freeze(i);
    state.frozen_layers.push_back(i);
    state.freeze_counter = 0;
    return i;
  }
  return std::nullopt;
}

/// One line of the decision log:
/// {"step":int,"arq":float,"radi":float,"gradient":float|null,"verdict":str,"frozen_layer":int|null}
std::string decision_log_line(std::size_t step, double arq, double radi, const ControlDecision& d,
                              std::optional<std::size_t> frozen_layer);

struct DecisionLogEntry {
  std::size_t step = 0;
  double arq = 0.0;
  double radi = 0.0;
  std::optional<double> gradient;
  Verdict verdict = Verdict::Continue;
  std::optional<std::size_t> frozen_layer;
};

DecisionLogEntry parse_decision_log_line(std::string_view line);

}  // namespace coad
