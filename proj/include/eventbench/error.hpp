#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eventbench {

enum class ErrorCode {
  UnknownLabel,
  FormatError,
  DuplicateId,
  MalformedLine,
  UnknownTag,
  EmptyBatch,
  InvalidTypes,
  Transport,
  BadStatus,
  MalformedResponse,
  MixedTasks,
  LengthMismatch,
  MissingDocs,
  EmptyWindow,
  MismatchedBuckets,
  InvalidArgument,
  ConfigError,
  CorpusError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports carries one of the codes above so that
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eventbench
