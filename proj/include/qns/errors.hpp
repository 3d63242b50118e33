#pragma once

#include <stdexcept>
#include <string>

namespace qns {

// Base class for all library failures. Everything numerical that can be
// violated by bad inputs (shape mismatches, domain windows, missing
// zero-mode policies, non-contraction, ...) throws a subclass of Error so
// drivers can map failures onto process exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched grids / component counts between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value left its admissible window (density outside [rho_bar/2, 3 rho_bar/2],
// Sobolev index out of range, invalid scheme order, ...). Carries the
// offending bounds in the message.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Density dropped to or below the configured positivity floor.
class PositivityError : public Error {
 public:
  using Error::Error;
};

// A Fourier multiplier is singular at xi = 0 and no zero-mode policy was given.
class MultiplierPolicyError : public Error {
 public:
  using Error::Error;
};

// Mean / solvability constraint violated beyond the configured bound.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// An iteration failed to contract or exceeded its budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_ratio)
      : Error(what), last_ratio(last_ratio) {}
  double last_ratio = 0.0;
};

// Time step rejected against the advective stability bound.
class CflError : public Error {
 public:
  CflError(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt(suggested_dt) {}
  double suggested_dt = 0.0;
};

// Outer fixed-point iteration diverging (successive-difference ratio > 1).
class ContractionError : public Error {
 public:
  ContractionError(const std::string& what, double last_ratio)
      : Error(what + " (last ratio " + std::to_string(last_ratio) + ")"),
        last_ratio(last_ratio) {}
  double last_ratio = 0.0;
};

// Quadrature / grid refinement changed a result beyond its advertised accuracy.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Dense system too ill-conditioned to trust.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Decay-fit preconditions violated (window too short, too few samples, ...).
class FitError : public Error {
 public:
  using Error::Error;
};

// Configuration file problems (syntax, unknown keys, bad values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem / artifact format problems.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qns
