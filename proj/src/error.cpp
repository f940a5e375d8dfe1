#include "webshop/error.hpp"

namespace webshop {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "invalid_argument";
        case ErrorCode::kMalformedRecord: return "malformed_record";
        case ErrorCode::kDuplicateId: return "duplicate_id";
        case ErrorCode::kInvalidPrice: return "invalid_price";
        case ErrorCode::kNotFound: return "not_found";
        case ErrorCode::kIllegalAction: return "illegal_action";
        case ErrorCode::kUnparsableAction: return "unparsable_action";
        case ErrorCode::kEpisodeDone: return "episode_done";
        case ErrorCode::kCapacityExceeded: return "capacity_exceeded";
        case ErrorCode::kExpired: return "expired";
        case ErrorCode::kIo: return "io_error";
    }
    return "unknown";
}

}  // namespace webshop
