#include "fixture.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>

namespace fixture {

namespace {

using namespace std::chrono;

std::string stamp(sys_seconds t) {
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()), long(hms.hours().count()), long(hms.minutes().count()),
                  long(hms.seconds().count()));
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// splitmix64 step mapped to [-1, 1); stable across standard libraries.
double noise(std::uint64_t key) {
    std::uint64_t z = key + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return double(z >> 11) / double(1ULL << 52) - 1.0;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Row of 11 segment MW with the whole quantity split between two segments
// so that the midpoint-weighted value hits `value`.
std::string segments(int lo_label, double lo_mid, double hi_mid, double value, double total) {
    const double w = (hi_mid - value) / (hi_mid - lo_mid);
    std::string row;
    for (int label = 1; label <= 11; ++label) {
        double mw = 0.0;
        if (label == lo_label) mw = w * total;
        if (label == lo_label + 1) mw = (1.0 - w) * total;
        row += "," + fmt(mw);
    }
    return row;
}

}  // namespace

Files make(const Spec& spec) {
    Files out;
    out.bids_csv = "interval_start_utc,market,direction";
    for (int i = 1; i <= 11; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, ",seg_%02d", i);
        out.bids_csv += buf;
    }
    out.bids_csv += ",self_schedule_mw,energy_award_mw\n";
    out.prices_csv = "timestamp_utc,market,location,price_usd_mwh\n";

    const sys_seconds start = sys_days{spec.first_day} - hours{kUtcOffsetHours};
    std::string rtm_rows;
    for (int d = 0; d < spec.days; ++d) {
        const double day_scale = 1.0 + 0.03 * double(d % 3);
        for (int h = 0; h < 24; ++h) {
            const sys_seconds hour_start = start + days{d} + hours{h};
            const bool spike = d == spec.spike_day && h >= spec.spike_start_hour &&
                               h < spec.spike_start_hour + spec.spike_hours;

            // Bids. RTPD discharge sits between segments 9 and 10 (350 and
            // 750 $/MW); charge between segments 6 and 7 (32.5 and 75).
            double rtpd_discharge = 575.0 + 20.0 * std::sin(kTwoPi * h / 24.0);
            if (d == spec.spike_day) rtpd_discharge = spike ? kSpikeDischargeBid : kPreSpikeDischargeBid;
            const double ifm_discharge = rtpd_discharge + (h % 5 != 0 ? 40.0 : -40.0);
            const double rtpd_charge = 50.0 + 10.0 * std::sin(kTwoPi * h / 12.0);
            const double ifm_charge = rtpd_charge + (h % 8 != 0 ? -5.0 : 5.0);

            out.bids_csv += stamp(hour_start) + ",IFM,CHARGE" + segments(6, 32.5, 75.0, ifm_charge, 95.0) +
                            ",5.0000,\n";
            out.bids_csv += stamp(hour_start) + ",IFM,DISCHARGE" +
                            segments(9, 350.0, 750.0, ifm_discharge, 100.0) + ",0.0000,\n";
            for (int q = 0; q < 4; ++q) {
                const sys_seconds t = hour_start + minutes{15 * q};
                const double charge_award = (h >= 10 && h < 15) ? 30.0 : 0.0;
                const double discharge_award = spike ? kSpikeClearedDischargeMw : 20.0;
                out.bids_csv += stamp(t) + ",RTPD,CHARGE" + segments(6, 32.5, 75.0, rtpd_charge, 95.0) +
                                ",5.0000," + fmt(charge_award) + "\n";
                out.bids_csv += stamp(t) + ",RTPD,DISCHARGE" +
                                segments(9, 350.0, 750.0, rtpd_discharge, 100.0) + ",0.0000," +
                                fmt(discharge_award) + "\n";
            }

            // Prices.
            const double base = day_scale * (40.0 + 15.0 * std::sin(kTwoPi * (h - 10) / 24.0));
            for (int loc = 0; loc < 2; ++loc) {
                const double dam = spike ? 300.0 + 5.0 * loc : base + 2.0 * loc;
                out.prices_csv += stamp(hour_start) + ",DAM,ZONE_" + std::to_string(loc + 1) + "," + fmt(dam) + "\n";
            }
            for (int m = 0; m < 12; ++m) {
                const sys_seconds t = hour_start + minutes{5 * m};
                for (int loc = 0; loc < 2; ++loc) {
                    const auto key = std::uint64_t(t.time_since_epoch().count()) * 2 + std::uint64_t(loc);
                    const double rt = (spike ? 1000.0 : base + 3.0 * loc) + 2.0 * noise(key);
                    rtm_rows += stamp(t) + ",RTM,ZONE_" + std::to_string(loc + 1) + "," + fmt(rt) + "\n";
                }
            }
        }
    }
    out.prices_csv += rtm_rows;
    return out;
}

}  // namespace fixture
