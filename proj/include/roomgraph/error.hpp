#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roomgraph {

enum class ErrorCode {
  kInvalidArgument,
  kParseError,
  kCyclicGraph,
  kUnreachable,
  kParentUnplaced,
  kUnsat,
  kSchemaRetryExhausted,
  kBackendUnavailable,
  kDimensionMismatch,
  kDuplicateId,
  kEmbedderUnavailable,
  kUnknownDescription,
  kUnsolvedLayout,
  kUnknownStage,
  kMissingInput,
  kIoError,
  kDisconnectedGraph,
  kClientUnavailable,
  kMalformedGrade,
  kImagesRequired,
  kConfigError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roomgraph
