#pragma once

#include <Eigen/Core>
#include <sstream>
#include <stdexcept>
#include <string>

namespace zokit {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid dimensions, sizes or parameter ranges.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A component evaluation produced a non-finite value. Carries the component
/// index and the probe point for diagnosis.
class EvalError : public Error {
 public:
  EvalError(int component, Eigen::VectorXd probe, double value)
      : Error(format(component, probe, value)),
        component_(component),
        probe_(std::move(probe)),
        value_(value) {}

  int component() const { return component_; }
  const Eigen::VectorXd& probe() const { return probe_; }
  double value() const { return value_; }

 private:
  static std::string format(int component, const Eigen::VectorXd& probe, double value) {
    std::ostringstream os;
    os << "non-finite value " << value << " from component " << component << " at probe [";
    for (Eigen::Index j = 0; j < probe.size(); ++j) {
      if (j) os << ", ";
      os << probe[j];
      if (j > 6) {
        os << ", ...";
        break;
      }
    }
    os << "]";
    return os.str();
  }

  int component_;
  Eigen::VectorXd probe_;
  double value_;
};

/// True-gradient access while a zeroth-order run holds the black-box trap.
class GradientAccessError : public Error {
 public:
  explicit GradientAccessError(const std::string& what) : Error(what) {}
};

/// Degenerate input to a statistical analysis (e.g. zero-covariance control
/// variate).
class AnalysisError : public Error {
 public:
  explicit AnalysisError(const std::string& what) : Error(what) {}
};

}  // namespace zokit
