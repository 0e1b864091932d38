#include "market/error.hpp"

namespace market {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::MalformedBody: return "MalformedBody";
    case ErrorCode::WeakPassword: return "WeakPassword";
    case ErrorCode::DomainNotAllowed: return "DomainNotAllowed";
    case ErrorCode::EmailTaken: return "EmailTaken";
    case ErrorCode::OtpMismatch: return "OtpMismatch";
    case ErrorCode::OtpExpired: return "OtpExpired";
    case ErrorCode::OtpNotFound: return "OtpNotFound";
    case ErrorCode::OtpAlreadyConsumed: return "OtpAlreadyConsumed";
    case ErrorCode::OtpLocked: return "OtpLocked";
    case ErrorCode::InvalidCredentials: return "InvalidCredentials";
    case ErrorCode::Unauthenticated: return "Unauthenticated";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::NonCompliant: return "NonCompliant";
    case ErrorCode::AlreadyReserved: return "AlreadyReserved";
    case ErrorCode::SelfRequestForbidden: return "SelfRequestForbidden";
    case ErrorCode::ReservedCannotDelete: return "ReservedCannotDelete";
    case ErrorCode::AlreadyResolved: return "AlreadyResolved";
    case ErrorCode::AccountExists: return "AccountExists";
    case ErrorCode::UnknownAccount: return "UnknownAccount";
    case ErrorCode::WrongTiming: return "WrongTiming";
    case ErrorCode::NothingPending: return "NothingPending";
    case ErrorCode::VersionConflict: return "VersionConflict";
    case ErrorCode::StoreUnavailable: return "StoreUnavailable";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace market
