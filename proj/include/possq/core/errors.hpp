#pragma once

#include <stdexcept>
#include <string>

namespace possq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// The possibility function integrates to less than one, so no probability
/// density bounded above by it exists.
class TooConcentrated : public Error {
 public:
  using Error::Error;
};

class InvalidWeights : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public InvalidWeights {
 public:
  using InvalidWeights::InvalidWeights;
};

class WeightsOutOfRange : public InvalidWeights {
 public:
  using InvalidWeights::InvalidWeights;
};

class NoUnitWeight : public InvalidWeights {
 public:
  using InvalidWeights::InvalidWeights;
};

/// Every particle weight vanished in a filter step (filter collapse).
class AllWeightsZero : public Error {
 public:
  using Error::Error;
};

/// Bearing requested for a relative position at the origin.
class AtOrigin : public Error {
 public:
  using Error::Error;
};

}  // namespace possq
