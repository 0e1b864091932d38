#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace market {

// Every failure a module can surface to a caller. The api layer maps each
// code onto exactly one (HTTP status, wire code) pair.
enum class ErrorCode {
  ValidationFailed,
  MalformedBody,
  WeakPassword,
  DomainNotAllowed,
  EmailTaken,
  OtpMismatch,
  OtpExpired,
  OtpNotFound,
  OtpAlreadyConsumed,
  OtpLocked,
  InvalidCredentials,
  Unauthenticated,
  Unauthorized,
  NotFound,
  UnknownCategory,
  NonCompliant,
  AlreadyReserved,
  SelfRequestForbidden,
  ReservedCannotDelete,
  AlreadyResolved,
  AccountExists,
  UnknownAccount,
  WrongTiming,
  NothingPending,
  VersionConflict,
  StoreUnavailable,
  ConfigInvalid,
};

inline constexpr std::array kAllErrorCodes = {
    ErrorCode::ValidationFailed,   ErrorCode::MalformedBody,
    ErrorCode::WeakPassword,       ErrorCode::DomainNotAllowed,
    ErrorCode::EmailTaken,         ErrorCode::OtpMismatch,
    ErrorCode::OtpExpired,         ErrorCode::OtpNotFound,
    ErrorCode::OtpAlreadyConsumed, ErrorCode::OtpLocked,
    ErrorCode::InvalidCredentials, ErrorCode::Unauthenticated,
    ErrorCode::Unauthorized,       ErrorCode::NotFound,
    ErrorCode::UnknownCategory,    ErrorCode::NonCompliant,
    ErrorCode::AlreadyReserved,    ErrorCode::SelfRequestForbidden,
    ErrorCode::ReservedCannotDelete, ErrorCode::AlreadyResolved,
    ErrorCode::AccountExists,      ErrorCode::UnknownAccount,
    ErrorCode::WrongTiming,        ErrorCode::NothingPending,
    ErrorCode::VersionConflict,    ErrorCode::StoreUnavailable,
    ErrorCode::ConfigInvalid,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field = {})
      : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  // Offending input field for ValidationFailed, empty otherwise.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace market
