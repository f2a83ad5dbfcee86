#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcmb {

enum class ErrorCode {
  InvalidParams,
  EmptyPayload,
  UnknownSender,
  MalformedTransaction,
  LeakRejected,
  DuplicateContract,
  EmptyConditionTable,
  DuplicateCondition,
  UnsupportedPredicate,
  NotCertified,
  SigningKeyUnavailable,
  UnknownChannel,
  DuplicateMessage,
  DatasetMissing,
  DuplicateVote,
  UnknownValidator,
  VotingOpen,
  ConfigInvalid,
  GateDenied,
  ChainInvalid,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Coarse grouping used for CLI exit codes.
enum class ErrorCategory { Usage = 2, Config = 3, Verification = 4, Protocol = 5, Io = 6 };

ErrorCategory category_of(ErrorCode code);

/// Every failure raised by the library carries one ErrorCode.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dcmb
