#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace credetect {

enum class ErrorCode {
  EncodingError,
  EmptyInput,
  DegenerateSamples,
  NonDecreasingModel,
  UnattainableSimilarity,
  EmptyBlob,
  StorageFull,
  NotFound,
  IntegrityViolation,
  InvalidCertificate,
  EmptyPlaintext,
  DecryptionFailure,
  BadSignature,
  NonceReplay,
  ParseError,
  CorruptChain,
  DuplicateHashId,
  InsufficientFunds,
  InvalidAmount,
  UnknownAddress,
  UnknownTask,
  WrongState,
  MalformedRecord,
  UnknownSerial,
  PastDeadline,
  NotYetDue,
  EvidenceMismatch,
  DuplicateChallenge,
  Unauthorized,
  ConfigError,
  CorpusTooSmall,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above; callers
// branch on code(), the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace credetect
