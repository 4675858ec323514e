#pragma once

#include <stdexcept>
#include <string>

namespace qcs {

// Base of every error the library throws. The CLI maps the subclasses onto
// process exit codes (config 2, estimation 3, I/O 4).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class OverflowError : public Error {
public:
  using Error::Error;
};

// Invalid model parameters, topology, or scenario document.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Geometry that has no physical meaning (non-monotone clock, degenerate
// Shapiro triangle, satellite below the elevation mask, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Estimation failures. NoPeakError is kept distinct so callers can tell a
// missing correlation peak from an empty overlap or too few blocks.
class EstimationError : public Error {
public:
  using Error::Error;
};

class NoPeakError : public EstimationError {
public:
  NoPeakError(const std::string& what, double significance)
      : EstimationError(what), significance_(significance) {}
  double significance() const noexcept { return significance_; }

private:
  double significance_;
};

class EmptyOverlapError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class InsufficientDataError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Malformed timetag file. Carries the 1-based line number of the offending line.
class ParseError : public IoError {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& why)
      : IoError(file + ":" + std::to_string(line) + ": " + why), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace qcs
