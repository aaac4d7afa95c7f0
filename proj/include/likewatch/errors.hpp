#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lw {

enum class ErrorCode {
  config = 1,
  io = 2,
  not_found = 3,
  rate_limited = 4,
  quota = 5,
  numeric = 6,
  resumable = 7,
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(std::string msg) : Error(ErrorCode::config, std::move(msg)) {}
};

struct IoError : Error {
  explicit IoError(std::string msg) : Error(ErrorCode::io, std::move(msg)) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(std::string msg) : Error(ErrorCode::not_found, std::move(msg)) {}
};

// Carries the epoch second at which the exhausted window or cap resets.
struct RateLimitedError : Error {
  RateLimitedError(std::string msg, std::int64_t reset)
      : Error(ErrorCode::rate_limited, std::move(msg)), reset_epoch_seconds(reset) {}
  std::int64_t reset_epoch_seconds;
};

struct QuotaError : Error {
  QuotaError(std::string msg, std::int64_t reset)
      : Error(ErrorCode::quota, std::move(msg)), reset_epoch_seconds(reset) {}
  std::int64_t reset_epoch_seconds;
};

struct NumericError : Error {
  explicit NumericError(std::string msg) : Error(ErrorCode::numeric, std::move(msg)) {}
};

// A failure after which a restarted run can continue from persisted state.
struct ResumableError : Error {
  ResumableError(std::string msg, std::int64_t reset = 0)
      : Error(ErrorCode::resumable, std::move(msg)), reset_epoch_seconds(reset) {}
  std::int64_t reset_epoch_seconds;
};

struct InternalError : Error {
  explicit InternalError(std::string msg) : Error(ErrorCode::internal, std::move(msg)) {}
};

}  // namespace lw
