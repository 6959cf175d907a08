#pragma once

#include <stdexcept>
#include <string>

namespace kerrbeam {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Fock expansion lost more norm than allowed at the chosen cutoff.
class TruncationLoss : public Error {
 public:
  using Error::Error;
};

/// A time-dependent schedule was queried outside its tabulated range.
class ScheduleDomain : public Error {
 public:
  using Error::Error;
};

class GridResolution : public Error {
 public:
  using Error::Error;
};

/// A trajectory produced NaN/Inf or violated a step guard.
class StepFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace kerrbeam
