#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace storage_bid_lab {

enum class ErrorKind {
    kMalformedRow,
    kUnknownMarket,
    kMixedGranularity,
    kMixedMarkets,
    kEmptyInput,
    kIntervalMismatch,
    kNoOverlap,
    kInvariantViolation,
    kAlignmentError,
    kInsufficientData,
    kEmptyPartition,
    kEmptySample,
    kTooShort,
    kGapPolicyViolation,
    kDateOutOfRange,
    kInvalidConfig,
    kIo,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can emit it as JSON.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Raised by the CSV parsers with the 1-based physical line number.
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line, const std::string& reason)
        : Error(ErrorKind::kMalformedRow,
                "line " + std::to_string(line) + ": " + reason),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace storage_bid_lab
