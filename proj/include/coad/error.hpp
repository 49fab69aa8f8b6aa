#pragma once

#include <stdexcept>
#include <string>

namespace coad {

/// Malformed or inconsistent caller input (length mismatch, empty class, bad file line).
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A value lies outside the domain where a formula is defined.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A fitted distribution collapsed to zero spread.
class DegenerateDistributionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Optimizer landed on a bracket end: the objective is monotone on the bracket.
class NoInteriorOptimumError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unknown or malformed configuration key.
class ConfigError : public InputError {
public:
  ConfigError(std::string key, const std::string& what)
      : InputError(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace coad
