#pragma once

#include <stdexcept>
#include <string>

namespace infmcmc {

/// A forward or linearized solve could not produce a finite answer.
/// Samplers turn this into a rejection; it only escapes during data
/// generation or when evaluating the initial state.
class SolverFailure : public std::runtime_error {
public:
  explicit SolverFailure(const std::string &what) : std::runtime_error(what) {}
};

/// The block precision of a split metric could not be factored.
class MetricFailure : public std::runtime_error {
public:
  explicit MetricFailure(const std::string &what) : std::runtime_error(what) {}
};

/// Invalid experiment configuration; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string &message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

} // namespace infmcmc
