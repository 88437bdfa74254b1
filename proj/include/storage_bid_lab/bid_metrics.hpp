#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "storage_bid_lab/market_data.hpp"

namespace storage_bid_lab {

// Representative $/MW value per bid segment: the arithmetic midpoint of the
// segment's price bin.
struct SegmentValueTable {
    std::array<double, kSegmentCount> midpoint{};

    double value(int label) const { return midpoint.at(std::size_t(label - 1)); }
};

const SegmentValueTable& segment_midpoints();

struct WeightedBid {
    Timestamp interval_start;
    Market market = Market::kRtpd;
    Direction direction = Direction::kDischarge;
    double value = 0.0;     // $/MW
    double total_mw = 0.0;  // segmented capacity behind `value`
};

// Capacity-weighted mean of segment values. Self-schedule MW is excluded.
// Empty when the snapshot holds no segmented capacity.
std::optional<WeightedBid> weighted_average_bid(const BidSnapshot& snapshot,
                                                const SegmentValueTable& table = segment_midpoints());

std::vector<WeightedBid> weighted_bids(std::span<const BidSnapshot> snapshots,
                                       const SegmentValueTable& table = segment_midpoints());

// discharge.value - charge.value. Throws IntervalMismatch unless both bids
// share interval and market and carry the expected directions.
double bid_spread(const WeightedBid& discharge, const WeightedBid& charge);

struct SpreadPoint {
    Timestamp interval_start;
    double spread = 0.0;
};

struct SpreadSeries {
    Market market = Market::kRtpd;
    std::vector<SpreadPoint> points;  // only intervals with both directions
};

SpreadSeries spread_series(std::span<const WeightedBid> bids, Market market);

// Averages sub-hourly bids of one market/direction into UTC hours; total_mw
// becomes the mean capacity over the contributing intervals.
std::vector<WeightedBid> hourly_average(std::span<const WeightedBid> bids);

SpreadSeries hourly_average(const SpreadSeries& spreads);

struct HourStats {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Indexed by local hour 0..23; hours with no bids stay empty. Quartiles use
// linear interpolation between order statistics.
using HourOfDayProfile = std::array<std::optional<HourStats>, 24>;

HourOfDayProfile hour_of_day_profile(std::span<const WeightedBid> bids, const TimeZone& tz);

struct DominanceResult {
    Direction direction = Direction::kDischarge;
    std::size_t common_hours = 0;
    std::size_t dominant_hours = 0;
    double fraction = 0.0;
};

// DISCHARGE: share of common hours with IFM > RTPD. CHARGE: share with
// IFM < RTPD. RTPD is averaged to the hour first; ties are not dominant.
DominanceResult cross_market_dominance(std::span<const WeightedBid> ifm,
                                       std::span<const WeightedBid> rtpd, Direction direction);

nlohmann::json to_json(const HourOfDayProfile& profile);
nlohmann::json to_json(const DominanceResult& result);

}  // namespace storage_bid_lab
