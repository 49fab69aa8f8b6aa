#pragma once

// Plain-text score files.
//
//   single-class:  one score per line
//   labeled:       `score,label` per line, label 0 (normal) or 1 (anomalous);
//                  an optional first line `score,label` is accepted as header
//
// Blank lines and lines starting with '#' are skipped. Non-finite values are
// rejected with the offending line number.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coad/metrics.hpp"

namespace coad {

std::vector<double> parse_scores(std::istream& in, const std::string& source);
ScoreSet parse_labeled_scores(std::istream& in, const std::string& source);

std::vector<double> read_scores(const std::filesystem::path& path);
ScoreSet read_labeled_scores(const std::filesystem::path& path);

void write_scores(std::ostream& out, std::span<const double> scores);
void write_labeled_scores(std::ostream& out, const ScoreSet& scores);

/// Parses a whole token as a finite double; throws InputError otherwise.
double parse_finite(std::string_view token, const std::string& where);

}  // namespace coad
