#include "ontopath/error.hpp"

#include <iostream>

namespace ontopath {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateDefinition: return "DuplicateDefinition";
    case ErrorCode::DanglingDefinition: return "DanglingDefinition";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::ReservedId: return "ReservedId";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::RootHasNoParentPath: return "RootHasNoParentPath";
    case ErrorCode::TooFewLeaves: return "TooFewLeaves";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::SourceTooLong: return "SourceTooLong";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

namespace {
std::string join_cycle(const std::vector<std::string>& cycle) {
  std::string s;
  for (const auto& n : cycle) {
    s += n;
    s += " -> ";
  }
  if (!cycle.empty()) s += cycle.front();
  return s;
}
}  // namespace

CycleError::CycleError(std::vector<std::string> cycle)
    : Error(ErrorCode::CycleDetected, join_cycle(cycle)), cycle_(std::move(cycle)) {}

void log_warning(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

}  // namespace ontopath
