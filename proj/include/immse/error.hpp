#pragma once

#include <stdexcept>
#include <string>

namespace immse {

// Numerical procedure could not reach its tolerance (quadrature stalled,
// root search diverged, ...). Maps to CLI exit code 3.
class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Covariance not positive definite or too badly conditioned to factor.
class DegenerateCovariance : public std::runtime_error {
 public:
  explicit DegenerateCovariance(const std::string& what) : std::runtime_error(what) {}
};

// SDE step violates the stability precondition dt <= 0.01 / max(nu, snr).
class StepTooLarge : public std::invalid_argument {
 public:
  explicit StepTooLarge(const std::string& what) : std::invalid_argument(what) {}
};

// Truncated snr-integral still has a significant integrand at snr_max and
// no tail estimator was requested.
class TailNotResolved : public std::runtime_error {
 public:
  explicit TailNotResolved(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace immse
