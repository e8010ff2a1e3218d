/* Copyright 2026 The PVIR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PVIR_ERRORS_H_
#define PVIR_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pvir {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kParse,
  kSchema,
  kConfig,
  kPhaseAbsent,
  kEmptyInput,
  kTooShort,
  kRateMismatch,
  kDegenerateSignal,
  kMissingOffset,
  kUnparseable,
  kBackend,
  kLengthMismatch,
  kEmptyCorpus,
  kMissingGroundTruth,
  kUnknownPhase,
  kEmptyInfo,
  kSchemaViolations,
  kExhaustedRetries,
};

std::string_view ErrorCodeName(ErrorCode code);

// Base of every error thrown by the library. what() carries the full message;
// code() identifies the failure class for callers that branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed input document. `location` is "line:column" for syntax errors or
// a field path for structural ones (e.g. "events[2]").
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& message)
      : Error(ErrorCode::kParse, location.empty() ? message
                                                  : location + ": " + message),
        location_(std::move(location)) {}

  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

// Well-formed document violating the schema. The field path is always set.
class SchemaError : public Error {
 public:
  SchemaError(std::string field_path, const std::string& message)
      : Error(ErrorCode::kSchema, field_path + ": " + message),
        field_path_(std::move(field_path)) {}

  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

enum class BackendErrorKind { kTimeout, kProtocol, kNoFixture };

std::string_view BackendErrorKindName(BackendErrorKind kind);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, std::string fingerprint,
               const std::string& message)
      : Error(ErrorCode::kBackend,
              std::string(BackendErrorKindName(kind)) + " [" + fingerprint +
                  "]: " + message),
        kind_(kind),
        fingerprint_(std::move(fingerprint)) {}

  BackendErrorKind kind() const { return kind_; }
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  BackendErrorKind kind_;
  std::string fingerprint_;
};

// A model response from which no phase boundaries could be read.
class UnparseableResponse : public Error {
 public:
  explicit UnparseableResponse(std::string raw_text)
      : Error(ErrorCode::kUnparseable,
              "no phase/timestamp pairs found in model response"),
        raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

// One failed rule in a report document, e.g. {"event_diagnosis.causal_chain",
// "phase order"}.
struct SchemaViolation {
  std::string path;
  std::string rule;

  std::string ToString() const { return path + ": " + rule; }
  friend bool operator==(const SchemaViolation&,
                         const SchemaViolation&) = default;
};

class SchemaViolationsError : public Error {
 public:
  explicit SchemaViolationsError(std::vector<SchemaViolation> violations);

  const std::vector<SchemaViolation>& violations() const {
    return violations_;
  }

 private:
  std::vector<SchemaViolation> violations_;
};

class ExhaustedRetriesError : public Error {
 public:
  ExhaustedRetriesError(int attempts, std::vector<SchemaViolation> last);

  int attempts() const { return attempts_; }
  const std::vector<SchemaViolation>& last_violations() const {
    return last_violations_;
  }

 private:
  int attempts_;
  std::vector<SchemaViolation> last_violations_;
};

}  // namespace pvir

#endif  // PVIR_ERRORS_H_
