#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psr {

/// Coarse failure classes. The CLI maps them onto exit codes 1, 2 and 3.
enum class ErrorCategory { usage, invariant, io };

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// A parameter or input violates a documented precondition.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCategory::invariant, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(ErrorCategory::invariant, what) {}
};

/// Input is well-formed but numerically degenerate (constant signal, zero mean, ...).
class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what) : Error(ErrorCategory::invariant, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

/// Bad magic, reserved bytes, zero dimensions or trailing data.
class MalformedHeader : public IoError {
 public:
  using IoError::IoError;
};

class TruncatedPayload : public IoError {
 public:
  using IoError::IoError;
};

/// Header dimensions whose product does not fit the addressable range.
class DimensionOverflow : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace psr
