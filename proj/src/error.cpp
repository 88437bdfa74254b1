#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kMalformedRow: return "MalformedRow";
        case ErrorKind::kUnknownMarket: return "UnknownMarket";
        case ErrorKind::kMixedGranularity: return "MixedGranularity";
        case ErrorKind::kMixedMarkets: return "MixedMarkets";
        case ErrorKind::kEmptyInput: return "EmptyInput";
        case ErrorKind::kIntervalMismatch: return "IntervalMismatch";
        case ErrorKind::kNoOverlap: return "NoOverlap";
        case ErrorKind::kInvariantViolation: return "InvariantViolation";
        case ErrorKind::kAlignmentError: return "AlignmentError";
        case ErrorKind::kInsufficientData: return "InsufficientData";
        case ErrorKind::kEmptyPartition: return "EmptyPartition";
        case ErrorKind::kEmptySample: return "EmptySample";
        case ErrorKind::kTooShort: return "TooShort";
        case ErrorKind::kGapPolicyViolation: return "GapPolicyViolation";
        case ErrorKind::kDateOutOfRange: return "DateOutOfRange";
        case ErrorKind::kInvalidConfig: return "InvalidConfig";
        case ErrorKind::kIo: return "Io";
    }
    return "Unknown";
}

}  // namespace storage_bid_lab
