#include "eventbench/error.hpp"

namespace eventbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InvalidTypes: return "InvalidTypes";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::BadStatus: return "BadStatus";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::MixedTasks: return "MixedTasks";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingDocs: return "MissingDocs";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::MismatchedBuckets: return "MismatchedBuckets";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CorpusError: return "CorpusError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace eventbench
