#include "storage_bid_lab/bid_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

namespace {

// Price bin of each segment, $/MW; bins are left-open except segment 1.
constexpr std::array<std::pair<double, double>, kSegmentCount> kSegmentBounds = {{
    {-150, -100}, {-100, -50}, {-50, -15}, {-15, 0}, {0, 15}, {15, 50},
    {50, 100}, {100, 200}, {200, 500}, {500, 1000}, {1000, 2000},
}};

SegmentValueTable make_midpoints() {
    SegmentValueTable t;
    for (std::size_t i = 0; i < kSegmentCount; ++i) {
        t.midpoint[i] = 0.5 * (kSegmentBounds[i].first + kSegmentBounds[i].second);
    }
    return t;
}

double quantile_sorted(const std::vector<double>& v, double p) {
    const double h = p * double(v.size() - 1);
    const auto lo = std::size_t(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

}  // namespace

const SegmentValueTable& segment_midpoints() {
    static const SegmentValueTable table = make_midpoints();
    return table;
}

std::optional<WeightedBid> weighted_average_bid(const BidSnapshot& snapshot, const SegmentValueTable& table) {
    const double total = snapshot.total_mw();
    if (!(total > 0.0)) return std::nullopt;
    double value = 0.0;
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::size_t i = 0; i < kSegmentCount; ++i) {
        if (snapshot.segment_mw[i] <= 0.0) continue;
        value += snapshot.segment_mw[i] / total * table.midpoint[i];
        lo = std::min(lo, table.midpoint[i]);
        hi = std::max(hi, table.midpoint[i]);
    }
    // Rounding must not push the mean outside the active segment values.
    value = std::clamp(value, lo, hi);
    return WeightedBid{snapshot.interval_start, snapshot.market, snapshot.direction, value, total};
}

std::vector<WeightedBid> weighted_bids(std::span<const BidSnapshot> snapshots, const SegmentValueTable& table) {
    std::vector<WeightedBid> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) {
        if (auto w = weighted_average_bid(s, table)) out.push_back(*w);
    }
    return out;
}

double bid_spread(const WeightedBid& discharge, const WeightedBid& charge) {
    if (discharge.interval_start != charge.interval_start || discharge.market != charge.market) {
        throw Error(ErrorKind::kIntervalMismatch,
                    "bid_spread: " + format_iso8601(discharge.interval_start) + " " +
                        std::string(to_string(discharge.market)) + " vs " +
                        format_iso8601(charge.interval_start) + " " + std::string(to_string(charge.market)));
    }
    if (discharge.direction != Direction::kDischarge || charge.direction != Direction::kCharge) {
        throw Error(ErrorKind::kIntervalMismatch, "bid_spread: expected (DISCHARGE, CHARGE) inputs");
    }
    return discharge.value - charge.value;
}

SpreadSeries spread_series(std::span<const WeightedBid> bids, Market market) {
    std::map<Timestamp, const WeightedBid*> charge;
    std::map<Timestamp, const WeightedBid*> discharge;
    for (const auto& b : bids) {
        if (b.market != market) continue;
        (b.direction == Direction::kCharge ? charge : discharge)[b.interval_start] = &b;
    }
    SpreadSeries out;
    out.market = market;
    for (const auto& [t, d] : discharge) {
        auto it = charge.find(t);
        if (it != charge.end()) out.points.push_back({t, bid_spread(*d, *it->second)});
    }
    return out;
}

std::vector<WeightedBid> hourly_average(std::span<const WeightedBid> bids) {
    struct Acc {
        double value = 0.0;
        double mw = 0.0;
        std::size_t n = 0;
    };
    std::map<std::tuple<int, int, Timestamp>, Acc> groups;
    for (const auto& b : bids) {
        auto& acc = groups[{int(b.market), int(b.direction), floor_to_hour(b.interval_start)}];
        acc.value += b.value;
        acc.mw += b.total_mw;
        acc.n += 1;
    }
    std::vector<WeightedBid> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        const auto& [market, direction, hour] = key;
        out.push_back({hour, Market(market), Direction(direction), acc.value / double(acc.n),
                       acc.mw / double(acc.n)});
    }
    return out;
}

SpreadSeries hourly_average(const SpreadSeries& spreads) {
    SpreadSeries out;
    out.market = spreads.market;
    std::map<Timestamp, std::pair<double, std::size_t>> groups;
    for (const auto& p : spreads.points) {
        auto& acc = groups[floor_to_hour(p.interval_start)];
        acc.first += p.spread;
        acc.second += 1;
    }
    for (const auto& [hour, acc] : groups) out.points.push_back({hour, acc.first / double(acc.second)});
    return out;
}

HourOfDayProfile hour_of_day_profile(std::span<const WeightedBid> bids, const TimeZone& tz) {
    std::array<std::vector<double>, 24> buckets;
    for (const auto& b : bids) buckets[std::size_t(tz.local_hour(b.interval_start))].push_back(b.value);
    HourOfDayProfile profile;
    for (std::size_t h = 0; h < 24; ++h) {
        auto& v = buckets[h];
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        HourStats s;
        s.count = v.size();
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / double(v.size());
        s.min = v.front();
        s.max = v.back();
        s.q1 = quantile_sorted(v, 0.25);
        s.median = quantile_sorted(v, 0.5);
        s.q3 = quantile_sorted(v, 0.75);
        profile[h] = s;
    }
    return profile;
}

DominanceResult cross_market_dominance(std::span<const WeightedBid> ifm, std::span<const WeightedBid> rtpd,
                                       Direction direction) {
    auto hourly_values = [direction](std::span<const WeightedBid> bids) {
        std::vector<WeightedBid> selected;
        for (const auto& b : bids) {
            if (b.direction == direction) selected.push_back(b);
        }
        std::map<Timestamp, double> by_hour;
        for (const auto& b : hourly_average(selected)) by_hour[b.interval_start] = b.value;
        return by_hour;
    };
    const auto ifm_hourly = hourly_values(ifm);
    const auto rtpd_hourly = hourly_values(rtpd);

    DominanceResult r;
    r.direction = direction;
    for (const auto& [hour, ifm_value] : ifm_hourly) {
        auto it = rtpd_hourly.find(hour);
        if (it == rtpd_hourly.end()) continue;
        ++r.common_hours;
        const bool dominant = direction == Direction::kDischarge ? ifm_value > it->second : ifm_value < it->second;
        if (dominant) ++r.dominant_hours;
    }
    if (r.common_hours == 0) {
        throw Error(ErrorKind::kNoOverlap, "cross_market_dominance: no common IFM/RTPD " +
                                               std::string(to_string(direction)) + " hours");
    }
    r.fraction = double(r.dominant_hours) / double(r.common_hours);
    return r;
}

nlohmann::json to_json(const HourOfDayProfile& profile) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t h = 0; h < 24; ++h) {
        if (!profile[h]) continue;
        const auto& s = *profile[h];
        arr.push_back({{"hour", h}, {"count", s.count}, {"mean", s.mean}, {"min", s.min}, {"q1", s.q1},
                       {"median", s.median}, {"q3", s.q3}, {"max", s.max}});
    }
    return arr;
}

nlohmann::json to_json(const DominanceResult& r) {
    return {{"direction", to_string(r.direction)},
            {"common_hours", r.common_hours},
            {"dominant_hours", r.dominant_hours},
            {"fraction", r.fraction}};
}

}  // namespace storage_bid_lab
