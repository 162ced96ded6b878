#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ontopath {

enum class ErrorCode {
  // ingestion
  MalformedRecord,
  DuplicateDefinition,
  DanglingDefinition,
  CycleDetected,
  EmptyGraph,
  ReservedId,
  UnknownNode,
  RootHasNoParentPath,
  // corpus
  TooFewLeaves,
  DimensionMismatch,
  MalformedLine,
  InvalidArgument,
  // numerics
  ShapeMismatch,
  IndexOutOfRange,
  EmptyBatch,
  SourceTooLong,
  NonFiniteLoss,
  // evaluation
  VocabMismatch,
  DegenerateInput,
  // io
  IoError,
  FormatError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by validate_dag; carries one offending cycle in traversal order.
class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

void log_warning(const std::string& msg);

}  // namespace ontopath
