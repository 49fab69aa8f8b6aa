#include "coad/score_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string_view>
#include <utility>

#include "coad/error.hpp"

namespace coad {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool skippable(std::string_view line) { return line.empty() || line.front() == '#'; }

std::string location(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open score file " + path.string());
  return in;
}

}  // namespace

double parse_finite(std::string_view token, const std::string& where) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    throw InputError(where + ": not a number: '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) throw InputError(where + ": non-finite value '" + std::string(token) + "'");
  return value;
}

std::vector<double> parse_scores(std::istream& in, const std::string& source) {
  std::vector<double> scores;
  std::string raw;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string_view line = trim(raw);
    if (skippable(line)) continue;
    scores.push_back(parse_finite(line, location(source, line_no)));
  }
  return scores;
}

ScoreSet parse_labeled_scores(std::istream& in, const std::string& source) {
  ScoreSet set;
  std::string raw;
  bool first_content = true;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string_view line = trim(raw);
    if (skippable(line)) continue;
    const bool is_first = std::exchange(first_content, false);
    if (is_first && line == "score,label") continue;

    const auto comma = line.find(',');
    const std::string where = location(source, line_no);
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw InputError(where + ": expected 'score,label'");
    }
    const double score = parse_finite(line.substr(0, comma), where);
    const std::string_view label = trim(line.substr(comma + 1));
    if (label == "0") {
      set.normal.push_back(score);
    } else if (label == "1") {
      set.anomaly.push_back(score);
    } else {
      throw InputError(where + ": label must be 0 or 1, got '" + std::string(label) + "'");
    }
  }
  return set;
}

std::vector<double> read_scores(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_scores(in, path.string());
}

ScoreSet read_labeled_scores(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_labeled_scores(in, path.string());
}

void write_scores(std::ostream& out, std::span<const double> scores) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double s : scores) out << s << '\n';
}

void write_labeled_scores(std::ostream& out, const ScoreSet& scores) {
  out << "score,label\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double s : scores.normal) out << s << ",0\n";
  for (double s : scores.anomaly) out << s << ",1\n";
}

}  // namespace coad
