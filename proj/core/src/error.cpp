#include "tas/error.hpp"

namespace tas {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::DuplicateColumn: return "DuplicateColumn";
    case ErrorCode::TableNotFound: return "TableNotFound";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::KeyColumnUpdate: return "KeyColumnUpdate";
    case ErrorCode::MalformedOperator: return "MalformedOperator";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::ProviderTimeout: return "ProviderTimeout";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::MalformedToolCall: return "MalformedToolCall";
    case ErrorCode::TranscriptExhausted: return "TranscriptExhausted";
    case ErrorCode::TranscriptMismatch: return "TranscriptMismatch";
    case ErrorCode::DuplicateUrl: return "DuplicateUrl";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::PageNotFound: return "PageNotFound";
    case ErrorCode::PolicyFailure: return "PolicyFailure";
    case ErrorCode::BudgetImpossible: return "BudgetImpossible";
    case ErrorCode::SchemaConstructionFailed: return "SchemaConstructionFailed";
    case ErrorCode::StoreFailure: return "StoreFailure";
    case ErrorCode::InvalidTask: return "InvalidTask";
    case ErrorCode::ColumnMismatch: return "ColumnMismatch";
    case ErrorCode::EmptyTrialSet: return "EmptyTrialSet";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace tas
