#include "coad/controller.hpp"

#include <cmath>
#include <json.hpp>

#include "coad/error.hpp"

namespace coad {

void validate(const ArqInterval& interval) {
  if (!(interval.theta > 0.0)) throw InputError("ARQ interval theta must be positive");
  if (!(interval.delta > 0.0)) throw InputError("ARQ interval delta must be positive");
  if (interval.lower() < 0.0) throw InputError("ARQ interval lower bound theta - delta is negative");
}

bool arq_in_interval(double arq, const ArqInterval& interval) {
  return arq >= interval.lower() && arq <= interval.upper();
}

ObservationWindow::ObservationWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 2) throw InputError("gradient window must hold at least 2 observations");
}

void ObservationWindow::push(Observation obs) {
  items_.push_back(obs);
  if (items_.size() > capacity_) items_.pop_front();
}

SlopeEstimate estimate_radi_gradient(std::span<const Observation> window) {
  if (window.size() < 2) return {};
  const double n = static_cast<double>(window.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& o : window) {
    mean_x += o.arq;
    mean_y += o.radi;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& o : window) {
    sxx += (o.arq - mean_x) * (o.arq - mean_x);
    sxy += (o.arq - mean_x) * (o.radi - mean_y);
  }
  if (!(sxx > 0.0)) return {};
  return {sxy / sxx, true};
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Continue: return "Continue";
    case Verdict::IncrementCounter: return "IncrementCounter";
    case Verdict::EmitFreezeSignal: return "EmitFreezeSignal";
  }
  return "Continue";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "Continue") return Verdict::Continue;
  if (s == "IncrementCounter") return Verdict::IncrementCounter;
  if (s == "EmitFreezeSignal") return Verdict::EmitFreezeSignal;
  throw InputError("unknown verdict '" + std::string(s) + "'");
}

ControllerState::ControllerState(int threshold, std::size_t window)
    : freeze_threshold(threshold), history(window) {
  if (threshold < 1) throw InputError("freeze threshold must be a positive integer");
}

ControlDecision dual_control_step(ControllerState& state, double arq, double radi,
                                  const ArqInterval& interval) {
  state.history.push({arq, radi});
  const auto window = state.history.snapshot();
  const SlopeEstimate slope = estimate_radi_gradient(window);

  ControlDecision d;
  if (slope.defined) d.reason.gradient_estimate = slope.slope;
  d.reason.arq_out_of_interval = !arq_in_interval(arq, interval);
  d.reason.radi_gradient_negative = slope.defined && slope.slope < 0.0;

  if (!d.reason.arq_out_of_interval && !d.reason.radi_gradient_negative) {
    state.freeze_counter = 0;
    d.verdict = Verdict::Continue;
    return d;
  }
  state.freeze_counter += 1;
  if (state.freeze_counter > state.freeze_threshold) {
    state.freeze_counter = 0;
    state.signals_emitted += 1;
    d.verdict = Verdict::EmitFreezeSignal;
  } else {
    d.verdict = Verdict::IncrementCounter;
  }
  return d;
}

std::string decision_log_line(std::size_t step, double arq, double radi, const ControlDecision& d,
                              std::optional<std::size_t> frozen_layer) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["arq"] = arq;
  j["radi"] = radi;
  j["gradient"] = d.reason.gradient_estimate ? nlohmann::ordered_json(*d.reason.gradient_estimate)
                                             : nlohmann::ordered_json(nullptr);
  j["verdict"] = to_string(d.verdict);
  j["frozen_layer"] = frozen_layer ? nlohmann::ordered_json(*frozen_layer) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

DecisionLogEntry parse_decision_log_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InputError("decision log line is not a JSON object");
  try {
    DecisionLogEntry e;
    e.step = j.at("step").get<std::size_t>();
    e.arq = j.at("arq").get<double>();
    e.radi = j.at("radi").get<double>();
    if (!j.at("gradient").is_null()) e.gradient = j.at("gradient").get<double>();
    e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (!j.at("frozen_layer").is_null()) e.frozen_layer = j.at("frozen_layer").get<std::size_t>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("malformed decision log line: ") + ex.what());
  }
}

}  // namespace coad
