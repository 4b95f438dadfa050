// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vizforge {

/// Root of every error thrown by the library. `fatal()` distinguishes errors
/// that must stop a stage from per-item failures that are only counted.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message, bool fatal = false)
      : std::runtime_error(message), fatal_(fatal) {}
  bool fatal() const noexcept { return fatal_; }

 private:
  bool fatal_;
};

// corpus-store

class RejectedRecordError : public Error {
 public:
  explicit RejectedRecordError(std::vector<std::string> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string out = "rejected record:";
    for (const auto& s : d) out += " [" + s + "]";
    return out;
  }
  std::vector<std::string> diagnostics_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& m) : Error(m, /*fatal=*/true) {}
};

class StorageError : public Error {
 public:
  explicit StorageError(const std::string& m) : Error(m, /*fatal=*/true) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> offending)
      : Error(join(offending), /*fatal=*/true), offending_(std::move(offending)) {}
  const std::vector<std::string>& offending_keys() const noexcept { return offending_; }

 private:
  static std::string join(const std::vector<std::string>& keys) {
    std::string out = "invalid config:";
    for (const auto& k : keys) out += " " + k + ";";
    return out;
  }
  std::vector<std::string> offending_;
};

class LockError : public Error {
 public:
  explicit LockError(const std::string& m) : Error(m, /*fatal=*/true) {}
};

// ingest

class MalformedItemError : public Error {
 public:
  using Error::Error;
};

class SourceError : public Error {
 public:
  explicit SourceError(const std::string& m) : Error(m, /*fatal=*/true) {}
};

// decompose

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// synthesis

class PlanningError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Generation output could not be used; counts as one attempt.
class MalformedGenerationError : public Error {
 public:
  using Error::Error;
};

class SnippetError : public Error {
 public:
  using Error::Error;
};

class EdgeError : public Error {
 public:
  using Error::Error;
};

// model-gateway

class TemplateError : public Error {
 public:
  using Error::Error;
};

class GatewayUnavailableError : public Error {
 public:
  explicit GatewayUnavailableError(const std::string& m) : Error(m, /*fatal=*/true) {}
};

class JudgeFormatError : public Error {
 public:
  using Error::Error;
};

/// Raised by providers for retryable transport failures (5xx, connection reset).
class TransportError : public Error {
 public:
  using Error::Error;
};

// bench

class EmptyReportError : public Error {
 public:
  using Error::Error;
};

// review

class ReviewError : public Error {
 public:
  enum class Kind { kValidation, kAuth, kNotFound, kConflict };
  ReviewError(Kind kind, const std::string& m) : Error(m), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace vizforge
