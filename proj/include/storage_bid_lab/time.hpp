#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

namespace storage_bid_lab {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

// Accepts `YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM]` (a space may replace the
// `T`). Offsets are folded into the UTC result. Returns false on malformed
// input.
bool parse_iso8601(std::string_view text, Timestamp& out);

// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_iso8601(Timestamp t);

bool parse_date(std::string_view text, Date& out);
std::string format_date(const Date& d);

Timestamp floor_to_hour(Timestamp t);

// Market-local calendar lookups. Wraps the system zoneinfo database so that
// DST transitions are honoured (23- and 25-hour days).
class TimeZone {
public:
    // Throws Error(kInvalidConfig) if the zone is unknown.
    explicit TimeZone(const std::string& name = "America/Los_Angeles");

    const std::string& name() const noexcept { return name_; }

    Date local_date(Timestamp t) const;
    int local_hour(Timestamp t) const;
    // UTC instant of local midnight that starts `d`.
    Timestamp start_of_day(const Date& d) const;

private:
    struct Impl;
    std::string name_;
    std::shared_ptr<const Impl> impl_;
};

}  // namespace storage_bid_lab
