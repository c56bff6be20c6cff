#pragma once

#include <stdexcept>
#include <string>

namespace spatialref {

// Error categories map one-to-one onto process exit codes and C API status
// values: internal = 1, validation = 2, unsatisfiable = 3.
enum class ErrorCode { Internal = 1, Validation = 2, Unsatisfiable = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Bad or inconsistent input: malformed files, out-of-range arguments,
// missing annotations, id mismatches.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg)
      : Error(ErrorCode::Validation, msg) {}
};

// The request is well-formed but cannot be satisfied by the scene
// (no supporting platform, quota unmet, requested family empty).
class UnsatisfiableError : public Error {
 public:
  explicit UnsatisfiableError(const std::string& msg)
      : Error(ErrorCode::Unsatisfiable, msg) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& msg)
      : Error(ErrorCode::Internal, msg) {}
};

}  // namespace spatialref
