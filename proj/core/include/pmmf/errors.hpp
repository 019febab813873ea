#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmmf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The observation window has zero likelihood under the model.
class ZeroLikelihoodError : public Error {
 public:
  ZeroLikelihoodError(std::size_t time, const std::string& what)
      : Error(what), time_(time) {}
  /// First absolute time index at which all forward mass vanished.
  std::size_t time() const { return time_; }

 private:
  std::size_t time_;
};

/// A conditional object is undefined on the given window (e.g. c(x_{r:n}) = 0).
class InvalidWindowError : public Error {
 public:
  using Error::Error;
};

class NotIrreducibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmmf
