#include <doctest.h>

#include <vector>

#include "coad/controller.hpp"
#include "coad/error.hpp"

using namespace coad;

namespace {

const ArqInterval kOneClass{0.006, 0.005};

}  // namespace

TEST_CASE("arq_in_interval") {
  CHECK(arq_in_interval(0.006, kOneClass));
  CHECK(arq_in_interval(kOneClass.lower(), kOneClass));
  CHECK(arq_in_interval(kOneClass.upper(), kOneClass));
  CHECK_FALSE(arq_in_interval(0.012, kOneClass));
  CHECK_FALSE(arq_in_interval(0.0009, kOneClass));

  const ArqInterval multi{0.06, 0.05};
  CHECK(arq_in_interval(0.01, multi));
  CHECK(arq_in_interval(0.11, multi));
  CHECK_FALSE(arq_in_interval(0.111, multi));

  CHECK_NOTHROW(validate(kOneClass));
  CHECK_THROWS_AS(validate(ArqInterval{0.001, 0.002}), InputError);
  CHECK_THROWS_AS(validate(ArqInterval{0.001, 0.0}), InputError);
}

TEST_CASE("estimate_radi_gradient") {
  const std::vector<Observation> two{{0.001, 0.90}, {0.002, 0.92}};
  auto s = estimate_radi_gradient(two);
  CHECK(s.defined);
  CHECK(s.slope == doctest::Approx(20.0).epsilon(1e-9));

  const std::vector<Observation> flat{{0.01, 0.9}, {0.02, 0.9}, {0.05, 0.9}};
  s = estimate_radi_gradient(flat);
  CHECK(s.defined);
  CHECK(s.slope == 0.0);

  const std::vector<Observation> three{{0.01, 0.95}, {0.02, 0.94}, {0.03, 0.92}};
  CHECK(estimate_radi_gradient(three).slope == doctest::Approx(-1.5).epsilon(1e-9));

  const std::vector<Observation> same_arq{{0.01, 0.5}, {0.01, 0.9}};
  CHECK_FALSE(estimate_radi_gradient(same_arq).defined);
  const std::vector<Observation> one{{0.01, 0.5}};
  CHECK_FALSE(estimate_radi_gradient(one).defined);
}

TEST_CASE("observation window keeps the most recent W entries") {
  ObservationWindow w(3);
  for (int i = 0; i < 5; ++i) w.push({double(i), double(i)});
  const auto snap = w.snapshot();
  REQUIRE(snap.size() == 3);
  CHECK(snap.front().arq == 2.0);
  CHECK(snap.back().arq == 4.0);
  CHECK_THROWS_AS(ObservationWindow(1), InputError);
}

TEST_CASE("dual_control_step") {
  SUBCASE("in-interval ARQ with rising RADI continues") {
    ControllerState st(3, 5);
    auto d = dual_control_step(st, 0.004, 0.90, kOneClass);
    CHECK(d.verdict == Verdict::Continue);
    d = dual_control_step(st, 0.005, 0.91, kOneClass);
    CHECK(d.verdict == Verdict::Continue);
    REQUIRE(d.reason.gradient_estimate.has_value());
    CHECK(*d.reason.gradient_estimate > 0.0);
    CHECK(st.freeze_counter == 0);
  }
  SUBCASE("four consecutive violations with C_thr = 3") {
    ControllerState st(3, 5);
    std::vector<Verdict> v;
    for (int i = 0; i < 4; ++i) v.push_back(dual_control_step(st, 0.02, 0.9, kOneClass).verdict);
    CHECK(v == std::vector<Verdict>{Verdict::IncrementCounter, Verdict::IncrementCounter, Verdict::IncrementCounter,
                                    Verdict::EmitFreezeSignal});
    CHECK(st.freeze_counter == 0);
    CHECK(st.signals_emitted == 1);
  }
  SUBCASE("a broken streak resets the counter") {
    ControllerState st(3, 5);
    dual_control_step(st, 0.02, 0.9, kOneClass);
    CHECK(st.freeze_counter == 1);
    const auto d = dual_control_step(st, 0.006, 0.9, kOneClass);
    CHECK(d.verdict == Verdict::Continue);
    CHECK(st.freeze_counter == 0);
    for (int i = 0; i < 3; ++i) CHECK(dual_control_step(st, 0.02, 0.9, kOneClass).verdict == Verdict::IncrementCounter);
    CHECK(st.signals_emitted == 0);
  }
  SUBCASE("falling RADI alone is a violation") {
    ControllerState st(1, 5);
    dual_control_step(st, 0.004, 0.95, kOneClass);
    const auto d = dual_control_step(st, 0.005, 0.94, kOneClass);
    CHECK(d.reason.radi_gradient_negative);
    CHECK_FALSE(d.reason.arq_out_of_interval);
    CHECK(d.verdict == Verdict::IncrementCounter);
  }
  CHECK_THROWS_AS(ControllerState(0, 5), InputError);
}

TEST_CASE("freeze_next_layer") {
  ControllerState st;
  FreezeFlags layers{{false, false, false}};
  st.freeze_counter = 2;
  CHECK(freeze_next_layer(layers, st) == 0);
  CHECK(st.freeze_counter == 0);
  CHECK(freeze_next_layer(layers, st) == 1);
  CHECK(freeze_next_layer(layers, st) == 2);
  CHECK_FALSE(freeze_next_layer(layers, st).has_value());
  CHECK(st.frozen_layers == std::vector<std::size_t>{0, 1, 2});

  FreezeFlags partial{{true, false, false}};
  ControllerState st2;
  CHECK(freeze_next_layer(partial, st2) == 1);
  CHECK(partial.frozen == std::vector<bool>{true, true, false});
}

// Reference model for the counter: fire on the (C_thr+1)-th consecutive violation.
TEST_CASE("exhaustive violation strings up to length 10") {
  const ArqInterval interval{0.5, 0.1};
  for (int c_thr = 1; c_thr <= 3; ++c_thr) {
    for (int len = 0; len <= 10; ++len) {
      for (unsigned mask = 0; mask < (1u << len); ++mask) {
        ControllerState st(c_thr, 5);
        FreezeFlags layers{std::vector<bool>(4, false)};
        int streak = 0;
        std::size_t expected_frozen = 0;
        for (int i = 0; i < len; ++i) {
          const bool violate = (mask >> i) & 1u;
          const auto d = dual_control_step(st, violate ? 0.9 : 0.5, 0.7, interval);
          const bool expect_signal = violate && ++streak == c_thr + 1;
          if (!violate || expect_signal) streak = 0;
          REQUIRE((d.verdict == Verdict::EmitFreezeSignal) == expect_signal);
          REQUIRE((d.verdict == Verdict::Continue) == !violate);
          if (expect_signal) {
            const auto frozen = freeze_next_layer(layers, st);
            if (expected_frozen < 4) {
              REQUIRE(frozen == expected_frozen);
              ++expected_frozen;
            } else {
              REQUIRE_FALSE(frozen.has_value());
            }
          }
          REQUIRE(st.freeze_counter <= c_thr);
        }
        for (std::size_t i = 0; i < st.frozen_layers.size(); ++i) REQUIRE(st.frozen_layers[i] == i);
      }
    }
  }
}

TEST_CASE("decision log lines") {
  ControlDecision d;
  d.verdict = Verdict::EmitFreezeSignal;
  d.reason.gradient_estimate = -1.5;
  const auto line = decision_log_line(7, 0.012, 0.93, d, 2);
  CHECK(line == R"({"step":7,"arq":0.012,"radi":0.93,"gradient":-1.5,"verdict":"EmitFreezeSignal","frozen_layer":2})");
  const auto e = parse_decision_log_line(line);
  CHECK(e.step == 7);
  CHECK(e.arq == 0.012);
  CHECK(e.gradient == -1.5);
  CHECK(e.verdict == Verdict::EmitFreezeSignal);
  CHECK(e.frozen_layer == 2);

  d.verdict = Verdict::Continue;
  d.reason.gradient_estimate.reset();
  const auto first = decision_log_line(1, 0.1, 0.5, d, std::nullopt);
  CHECK(first == R"({"step":1,"arq":0.1,"radi":0.5,"gradient":null,"verdict":"Continue","frozen_layer":null})");
  const auto none = parse_decision_log_line(first);
  CHECK_FALSE(none.frozen_layer.has_value());
  CHECK_FALSE(none.gradient.has_value());
  CHECK_THROWS_AS(parse_decision_log_line("{"), InputError);
  CHECK_THROWS_AS(parse_decision_log_line(R"({"step":1})"), InputError);
}
