#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sonoloop {

/// Precondition violated by the caller (bad geometry, out-of-extent query, shape mismatch).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation has no defined answer for the given data, e.g. a confidence map
/// without depth-weighted mass. Callers are expected to recover.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario validation failure. Every issue is prefixed by the JSON path it refers to.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues);

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptRecordError : public RecordError {
 public:
  using RecordError::RecordError;
};

class VersionError : public RecordError {
 public:
  using RecordError::RecordError;
};

class DigestMismatchError : public RecordError {
 public:
  using RecordError::RecordError;
};

}  // namespace sonoloop
