#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wavets {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  Validation = 2,  // bad configuration, shapes, or preconditions
  Data = 3,        // unreadable or invalid input data
  Numerical = 4,   // non-finite values produced during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class UnknownWaveletError : public ValidationError {
 public:
  explicit UnknownWaveletError(const std::string& name)
      : ValidationError("unknown wavelet '" + name + "' (supported: db1, bior1.1, rbio1.1)") {}
};

class OddLengthError : public ValidationError {
 public:
  explicit OddLengthError(std::size_t length)
      : ValidationError("signal length " + std::to_string(length) + " is not even and >= 2") {}
};

class LengthMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Raised when a signal cannot be halved at some cascade level.
class DivisibilityError : public ValidationError {
 public:
  DivisibilityError(std::size_t length, std::size_t level)
      : ValidationError("length " + std::to_string(length) + " is not divisible by 2^" +
                        std::to_string(level) + " (fails at level " + std::to_string(level) + ")"),
        level_(level) {}
  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

class InconsistentPyramidError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace wavets
