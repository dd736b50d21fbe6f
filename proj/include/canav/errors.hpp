#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace canav {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when a replay-only backend has no recorded response for a request.
class FixtureError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class DecompositionError : public Error {
 public:
  DecompositionError(const std::string& what, std::string raw_reply)
      : Error(what), raw_reply_(std::move(raw_reply)) {}

  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class UnreachableGoalError : public Error {
 public:
  using Error::Error;
};

}  // namespace canav
