#pragma once

#include <stdexcept>
#include <string>

namespace gwdev {

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BracketError : std::runtime_error {
  explicit BracketError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CalibrationFailure : std::runtime_error {
  explicit CalibrationFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct TruncationError : std::runtime_error {
  explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientSamples : std::runtime_error {
  explicit InsufficientSamples(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Unclassifiable : std::runtime_error {
  explicit Unclassifiable(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gwdev
