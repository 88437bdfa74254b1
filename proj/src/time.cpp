#include "storage_bid_lab/time.hpp"

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <charconv>
#include <cstdio>

#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > text.size()) return false;
    const char* first = text.data() + pos;
    const char* last = first + width;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

absl::Time to_absl(Timestamp t) {
    return absl::FromUnixSeconds(t.time_since_epoch().count());
}

}  // namespace

bool parse_iso8601(std::string_view text, Timestamp& out) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (text.size() < 16) return false;
    if (!read_int(text, 0, 4, y) || text[4] != '-' || !read_int(text, 5, 2, mo) ||
        text[7] != '-' || !read_int(text, 8, 2, d)) {
        return false;
    }
    if (text[10] != 'T' && text[10] != ' ') return false;
    if (!read_int(text, 11, 2, h) || text[13] != ':' || !read_int(text, 14, 2, mi)) {
        return false;
    }
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        if (!read_int(text, pos + 1, 2, s)) return false;
        pos += 3;
    }
    int offset_minutes = 0;
    if (pos < text.size()) {
        const char tz = text[pos];
        if (tz == 'Z' && pos + 1 == text.size()) {
            pos += 1;
        } else if ((tz == '+' || tz == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
            int oh = 0, om = 0;
            if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om)) return false;
            offset_minutes = (tz == '+' ? 1 : -1) * (oh * 60 + om);
            pos += 6;
        } else {
            return false;
        }
    }
    if (h > 23 || mi > 59 || s > 59) return false;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(mo)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) return false;
    out = std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
          std::chrono::seconds{s} - std::chrono::minutes{offset_minutes};
    return true;
}

std::string format_iso8601(Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                  int(hms.minutes().count()), int(hms.seconds().count()));
    return buf;
}

bool parse_date(std::string_view text, Date& out) {
    int y = 0, mo = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) {
        return false;
    }
    out = Date{std::chrono::year{y}, std::chrono::month{unsigned(mo)}, std::chrono::day{unsigned(d)}};
    return out.ok();
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()),
                  unsigned(d.day()));
    return buf;
}

Timestamp floor_to_hour(Timestamp t) {
    return std::chrono::floor<std::chrono::hours>(t);
}

struct TimeZone::Impl {
    absl::TimeZone zone;
};

TimeZone::TimeZone(const std::string& name) : name_(name) {
    auto impl = std::make_shared<Impl>();
    if (!absl::LoadTimeZone(name, &impl->zone)) {
        throw Error(ErrorKind::kInvalidConfig, "unknown time zone: " + name);
    }
    impl_ = std::move(impl);
}

Date TimeZone::local_date(Timestamp t) const {
    const absl::CivilDay day = absl::ToCivilDay(to_absl(t), impl_->zone);
    return Date{std::chrono::year{int(day.year())}, std::chrono::month{unsigned(day.month())},
                std::chrono::day{unsigned(day.day())}};
}

int TimeZone::local_hour(Timestamp t) const {
    return absl::ToCivilHour(to_absl(t), impl_->zone).hour();
}

Timestamp TimeZone::start_of_day(const Date& d) const {
    const absl::CivilDay day(int(d.year()), unsigned(d.month()), unsigned(d.day()));
    const absl::Time t = absl::FromCivil(day, impl_->zone);
    return Timestamp{std::chrono::seconds{absl::ToUnixSeconds(t)}};
}

}  // namespace storage_bid_lab
