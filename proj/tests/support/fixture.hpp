#pragma once

// Deterministic synthetic market data shaped like the CAISO reports the
// pipeline ingests: hourly IFM and 15-minute RTPD bids, hourly DAM and
// 5-minute RTM prices at two locations, with an optional afternoon price
// spike on one day.

#include <chrono>
#include <string>

namespace fixture {

struct Spec {
    std::chrono::year_month_day first_day{std::chrono::year{2023}, std::chrono::month{8}, std::chrono::day{15}};
    int days = 2;
    int spike_day = 1;  // index into the days, -1 for none
    int spike_start_hour = 16;  // local
    int spike_hours = 4;
};

struct Files {
    std::string bids_csv;
    std::string prices_csv;
};

// Local time is fixed at UTC-7, so first_day should fall inside US daylight
// time.
constexpr int kUtcOffsetHours = -7;

Files make(const Spec& spec = {});

// RTPD discharge bid before and during the spike on the spike day.
constexpr double kPreSpikeDischargeBid = 575.0;
constexpr double kSpikeDischargeBid = 550.0;
constexpr double kSpikeClearedDischargeMw = 400.0;

}  // namespace fixture
