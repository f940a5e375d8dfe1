#pragma once

#include <stdexcept>
#include <string>

namespace webshop {

/// Machine-readable error categories shared by the library, the CLI and the
/// HTTP layer (which maps them onto status codes).
enum class ErrorCode {
    kInvalidArgument,
    kMalformedRecord,
    kDuplicateId,
    kInvalidPrice,
    kNotFound,
    kIllegalAction,
    kUnparsableAction,
    kEpisodeDone,
    kCapacityExceeded,
    kExpired,
    kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace webshop
