#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "gwdev/errors.hpp"

namespace gwdev {

// Slowly varying factor L(x) with closed-form evaluation and derivative.
// Three built-in kinds:
//   Constant:     L(x) = c
//   LogPower:     L(x) = c * (ln(e + x))^delta
//   LogLogPower:  L(x) = c * (ln(e + ln(e + x)))^delta
// All are positive and bounded away from 0 and infinity on compacts of [0,inf).
struct SlowlyVarying {
  enum class Kind { Constant, LogPower, LogLogPower };

  Kind kind = Kind::Constant;
  double c = 1.0;
  double delta = 0.0;

  static SlowlyVarying constant(double c = 1.0) {
    if (c <= 0) throw ConfigError("SlowlyVarying: c must be positive");
    return {Kind::Constant, c, 0.0};
  }
  static SlowlyVarying log_power(double c, double delta) {
    if (c <= 0) throw ConfigError("SlowlyVarying: c must be positive");
    return {Kind::LogPower, c, delta};
  }
  static SlowlyVarying log_log_power(double c, double delta) {
    if (c <= 0) throw ConfigError("SlowlyVarying: c must be positive");
    return {Kind::LogLogPower, c, delta};
  }

  bool is_constant() const { return kind == Kind::Constant || delta == 0.0; }

  double operator()(double x) const {
    if (x < 0) throw DomainError("SlowlyVarying: x must be >= 0");
    switch (kind) {
      case Kind::Constant:
        return c;
      case Kind::LogPower:
        return c * std::pow(std::log(std::exp(1.0) + x), delta);
      case Kind::LogLogPower:
        return c * std::pow(std::log(std::exp(1.0) + std::log(std::exp(1.0) + x)),
                            delta);
    }
    return c;
  }

  // d/dx log L(x); used for tail-density closed forms.
  double dlog(double x) const {
    const double e = std::exp(1.0);
    switch (kind) {
      case Kind::Constant:
        return 0.0;
      case Kind::LogPower:
        return delta / ((e + x) * std::log(e + x));
      case Kind::LogLogPower: {
        const double inner = std::log(e + x);
        return delta / ((e + inner) * std::log(e + inner) * (e + x));
      }
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Constant:
        return "Constant(" + std::to_string(c) + ")";
      case Kind::LogPower:
        return "LogPower(" + std::to_string(c) + "," + std::to_string(delta) + ")";
      case Kind::LogLogPower:
        return "LogLogPower(" + std::to_string(c) + "," + std::to_string(delta) +
               ")";
    }
    return "?";
  }
};

}  // namespace gwdev
