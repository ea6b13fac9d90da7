#pragma once

#include <stdexcept>
#include <string>

namespace oryon {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class DegenerateConfigurationError : public Error {
 public:
  using Error::Error;
};

class TooFewMatchesError : public Error {
 public:
  using Error::Error;
};

class NoConsensusError : public Error {
 public:
  using Error::Error;
};

class EmptyRenderError : public Error {
 public:
  using Error::Error;
};

class EmptyMatchSetError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace oryon
