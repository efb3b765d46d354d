#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tas {

enum class ErrorCode {
  // table store
  InvalidSchema,
  DuplicateColumn,
  TableNotFound,
  UnknownColumn,
  MissingKey,
  KeyColumnUpdate,
  MalformedOperator,
  InvalidValue,
  IoFailure,
  CorruptSnapshot,
  // llm provider
  ContextOverflow,
  ProviderTimeout,
  ProviderError,
  MalformedToolCall,
  TranscriptExhausted,
  TranscriptMismatch,
  // web env
  DuplicateUrl,
  SchemaViolation,
  PageNotFound,
  // agents
  PolicyFailure,
  BudgetImpossible,
  // orchestrator
  SchemaConstructionFailed,
  StoreFailure,
  InvalidTask,
  // metrics
  ColumnMismatch,
  EmptyTrialSet,
  // generic
  PreconditionViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above. The
// what() string is "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace tas
