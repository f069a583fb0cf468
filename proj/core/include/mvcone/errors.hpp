#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mvcone {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A market specification failed validation. `period()` is -1 when the
/// failure is not tied to a single period (e.g. horizon mismatch).
class InvalidMarket : public Error {
public:
    InvalidMarket(int period, const std::string& reason)
        : Error(period >= 0 ? "invalid market (period " + std::to_string(period) + "): " + reason
                            : "invalid market: " + reason),
          period_(period) {}
    int period() const noexcept { return period_; }

private:
    int period_;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped without meeting its tolerance. Carries the
/// best iterate found and its residual.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iterations, double residual,
                  Eigen::VectorXd best = {})
        : Error(what + " (iterations=" + std::to_string(iterations) +
                ", residual=" + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual), best_(std::move(best)) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }
    const Eigen::VectorXd& best_iterate() const noexcept { return best_; }

private:
    int iterations_;
    double residual_;
    Eigen::VectorXd best_;
};

class ZeroMeanExcess : public Error {
public:
    ZeroMeanExcess() : Error("mean excess return vector is zero; no cone has it in its dual interior") {}
};

class BackendMismatch : public Error {
public:
    using Error::Error;
};

class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// The requested expected terminal wealth cannot be reached because the
/// applicable C_0 equals one.
class TargetUnattainable : public Error {
public:
    using Error::Error;
};

class InvalidTarget : public Error {
public:
    using Error::Error;
};

class InsufficientConditioningEvents : public Error {
public:
    using Error::Error;
};

/// Malformed or unknown configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mvcone
