#pragma once

// Canonical in-memory model for fleet storage bid reports and zonal/hub
// price files, plus the temporal and cross-location aggregations the rest of
// the pipeline consumes.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "storage_bid_lab/time.hpp"

namespace storage_bid_lab {

// IFM/RTPD label bid snapshots; DAM_PRICE/RT_PRICE label price data.
enum class Market { kIfm, kRtpd, kDamPrice, kRtPrice };
enum class Direction { kCharge, kDischarge };
enum class Aggregation { kMin, kMax, kMean };

std::string_view to_string(Market m);
std::string_view to_string(Direction d);
std::string_view to_string(Aggregation a);

inline constexpr std::size_t kSegmentCount = 11;

struct BidSnapshot {
    Timestamp interval_start;
    Market market = Market::kIfm;
    Direction direction = Direction::kDischarge;
    // segment_mw[0] is segment label 1 ([-150,-100] $/MW), segment_mw[10] is
    // label 11 ((1000,2000] $/MW).
    std::array<double, kSegmentCount> segment_mw{};
    double self_schedule_mw = 0.0;
    // Cleared energy for this market/direction/interval, when the report
    // carries it.
    std::optional<double> energy_award_mw;

    double total_mw() const;
    // 1-based segment label lookup.
    double segment(int label) const { return segment_mw.at(std::size_t(label - 1)); }
};

struct ParsedBids {
    std::vector<BidSnapshot> snapshots;  // sorted by (interval, market, direction)
    std::vector<std::string> warnings;
};

// Bid CSV: interval_start_utc, market, direction, seg_01..seg_11,
// self_schedule_mw, and optionally energy_award_mw. Other columns are
// ignored. Out-of-order rows are kept, sorted and reported as warnings; a
// repeated (interval, market, direction) keeps the last row.
ParsedBids parse_bid_report(std::string_view csv);
std::string serialize_bid_report(std::span<const BidSnapshot> snapshots);

// Later reports override earlier ones on duplicate intervals.
std::vector<BidSnapshot> merge_bid_reports(const std::vector<std::vector<BidSnapshot>>& reports);

struct PriceSample {
    Timestamp timestamp;
    std::string location;
    Market market = Market::kRtPrice;
    double price = 0.0;  // $/MWh
};

// Price CSV: timestamp_utc, market (DAM|RTM), location, price_usd_mwh.
// RTM must be 5-minute granular and DAM hourly, per location.
// Result is ordered by (market, location, timestamp).
std::vector<PriceSample> parse_price_csv(std::string_view csv);
std::string serialize_price_csv(std::span<const PriceSample> samples);

struct PricePoint {
    Timestamp timestamp;
    double price = 0.0;
};

// Time-ordered price series for one market. Timestamps are strictly
// increasing; the constructor enforces it.
class PriceSeries {
public:
    PriceSeries() = default;
    PriceSeries(Market market, Aggregation aggregation, std::vector<PricePoint> samples);

    Market market() const noexcept { return market_; }
    Aggregation aggregation() const noexcept { return aggregation_; }
    const std::vector<PricePoint>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

private:
    Market market_ = Market::kRtPrice;
    Aggregation aggregation_ = Aggregation::kMean;
    std::vector<PricePoint> samples_;
};

// Instantaneous min/max/unweighted mean across whichever locations report at
// each timestamp.
PriceSeries aggregate_locations(std::span<const PriceSample> samples, Aggregation aggregation);

// Mean of the samples inside each UTC hour. Hours without samples are
// omitted (and appended to `missing_hours` when given).
PriceSeries resample_hourly(const PriceSeries& series,
                            std::vector<Timestamp>* missing_hours = nullptr);

struct DailyMean {
    Date date;
    double mean = 0.0;
    std::size_t count = 0;
};

// Per local calendar date in `tz`; DST days average over however many
// samples they hold.
std::vector<DailyMean> daily_aggregate(const PriceSeries& series, const TimeZone& tz);

struct TimeGap {
    Timestamp first_missing;
    Timestamp last_missing;
    std::size_t missing_intervals = 0;
};

struct SeriesCoverage {
    std::string label;
    std::optional<Date> first_date;
    std::optional<Date> last_date;
    std::size_t days_with_data = 0;
    std::size_t records = 0;
    std::vector<TimeGap> gaps;
};

struct ValidationReport {
    std::vector<SeriesCoverage> bid_coverage;
    std::vector<SeriesCoverage> price_coverage;
    std::size_t bid_snapshots = 0;
    // self-schedule MW / (segmented MW + self-schedule MW), over all intervals.
    double self_schedule_share = 0.0;
    double max_interval_self_schedule_share = 0.0;
    // Snapshots with any MW in segment 11.
    std::size_t segment11_count = 0;
};

ValidationReport validate_dataset(std::span<const BidSnapshot> bids,
                                  std::span<const PriceSeries> prices, const TimeZone& tz);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace storage_bid_lab
