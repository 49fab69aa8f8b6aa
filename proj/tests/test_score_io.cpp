#include <doctest.h>

#include <random>
#include <sstream>

#include "coad/error.hpp"
#include "coad/kv_config.hpp"
#include "coad/score_io.hpp"

using namespace coad;

TEST_CASE("parse single-class score files") {
  std::istringstream in("# header comment\n1.5\n\n  -2e3 \n+0.25\n");
  const auto s = parse_scores(in, "scores.txt");
  CHECK(s == std::vector<double>{1.5, -2000.0, 0.25});

  std::istringstream bad("1\n2\nnan\n");
  CHECK_THROWS_WITH_AS(parse_scores(bad, "scores.txt"), doctest::Contains("scores.txt:3"), InputError);
  std::istringstream inf("inf\n");
  CHECK_THROWS_AS(parse_scores(inf, "f"), InputError);
  std::istringstream junk("1.0abc\n");
  CHECK_THROWS_WITH(parse_scores(junk, "f"), doctest::Contains("f:1"));
}

TEST_CASE("parse labeled score files") {
  std::istringstream in("score,label\n0.1,0\n# c\n0.9,1\n0.2, 0\n");
  const auto s = parse_labeled_scores(in, "l.csv");
  CHECK(s.normal == std::vector<double>{0.1, 0.2});
  CHECK(s.anomaly == std::vector<double>{0.9});

  std::istringstream bad_label("0.1,2\n");
  CHECK_THROWS_WITH(parse_labeled_scores(bad_label, "l.csv"), doctest::Contains("l.csv:1"));
  std::istringstream missing("0.1\n");
  CHECK_THROWS_AS(parse_labeled_scores(missing, "l.csv"), InputError);
  std::istringstream nonfinite("0.1,0\n-inf,1\n");
  CHECK_THROWS_WITH(parse_labeled_scores(nonfinite, "l.csv"), doctest::Contains("l.csv:2"));
}

TEST_CASE("written scores parse back exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 100.0);
  ScoreSet set;
  for (int i = 0; i < 200; ++i) (i % 3 ? set.normal : set.anomaly).push_back(nd(rng));

  std::stringstream plain;
  write_scores(plain, set.normal);
  CHECK(parse_scores(plain, "p") == set.normal);

  std::stringstream labeled;
  write_labeled_scores(labeled, set);
  const auto back = parse_labeled_scores(labeled, "l");
  CHECK(back.normal == set.normal);
  CHECK(back.anomaly == set.anomaly);
}

TEST_CASE("key-value config files") {
  std::istringstream in("# model\nk = 2\nh=1.5\n\nname = demo\n");
  const auto kv = parse_key_values(in, "m.cfg");
  CHECK(kv_double(kv, "k", 0) == 2.0);
  CHECK(kv_double(kv, "h", 0) == 1.5);
  CHECK(kv_double(kv, "missing", 7.0) == 7.0);
  CHECK(kv_string(kv, "name", "") == "demo");
  CHECK_THROWS_AS(kv_int(kv, "h", 0), ConfigError);
  CHECK_THROWS_AS(kv_double(kv, "name", 0), ConfigError);

  try {
    reject_unknown_keys(kv, {"k", "h"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "name");
  }

  std::istringstream dup("k = 1\nk = 2\n");
  CHECK_THROWS_AS(parse_key_values(dup, "d"), ConfigError);
  std::istringstream noeq("just a line\n");
  CHECK_THROWS_AS(parse_key_values(noeq, "d"), ConfigError);
}
