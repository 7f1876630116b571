#include "credetect/errors.hpp"

namespace credetect {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::NonDecreasingModel: return "NonDecreasingModel";
    case ErrorCode::UnattainableSimilarity: return "UnattainableSimilarity";
    case ErrorCode::EmptyBlob: return "EmptyBlob";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IntegrityViolation: return "IntegrityViolation";
    case ErrorCode::InvalidCertificate: return "InvalidCertificate";
    case ErrorCode::EmptyPlaintext: return "EmptyPlaintext";
    case ErrorCode::DecryptionFailure: return "DecryptionFailure";
    case ErrorCode::BadSignature: return "BadSignature";
    case ErrorCode::NonceReplay: return "NonceReplay";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CorruptChain: return "CorruptChain";
    case ErrorCode::DuplicateHashId: return "DuplicateHashId";
    case ErrorCode::InsufficientFunds: return "InsufficientFunds";
    case ErrorCode::InvalidAmount: return "InvalidAmount";
    case ErrorCode::UnknownAddress: return "UnknownAddress";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UnknownSerial: return "UnknownSerial";
    case ErrorCode::PastDeadline: return "PastDeadline";
    case ErrorCode::NotYetDue: return "NotYetDue";
    case ErrorCode::EvidenceMismatch: return "EvidenceMismatch";
    case ErrorCode::DuplicateChallenge: return "DuplicateChallenge";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace credetect
