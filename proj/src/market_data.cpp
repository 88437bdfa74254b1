#include "storage_bid_lab/market_data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "csv.hpp"
#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

namespace {

using std::chrono::hours;
using std::chrono::minutes;

constexpr std::array<std::string_view, kSegmentCount> kSegmentColumns = {
    "seg_01", "seg_02", "seg_03", "seg_04", "seg_05", "seg_06",
    "seg_07", "seg_08", "seg_09", "seg_10", "seg_11"};

class Header {
public:
    explicit Header(const csv::Line& line) : fields_(csv::split(line.text)) {}

    std::size_t require(std::string_view name, std::size_t line) const {
        auto idx = find(name);
        if (!idx) throw MalformedRow(line, "missing column '" + std::string(name) + "'");
        return *idx;
    }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = std::find(fields_.begin(), fields_.end(), name);
        if (it == fields_.end()) return std::nullopt;
        return std::size_t(it - fields_.begin());
    }

    std::size_t width() const { return fields_.size(); }

private:
    std::vector<std::string_view> fields_;
};

double parse_mw(std::string_view field, std::string_view column, std::size_t line) {
    auto v = csv::parse_double(field);
    if (!v) throw MalformedRow(line, "non-numeric " + std::string(column) + " '" + std::string(field) + "'");
    if (*v < 0.0) throw MalformedRow(line, "negative MW in " + std::string(column));
    return *v;
}

bool aligned(Timestamp t, std::chrono::seconds step) {
    return t.time_since_epoch().count() % step.count() == 0;
}

std::chrono::seconds nominal_step(Market m) {
    switch (m) {
        case Market::kIfm: return hours{1};
        case Market::kRtpd: return minutes{15};
        case Market::kDamPrice: return hours{1};
        case Market::kRtPrice: return minutes{5};
    }
    return hours{1};
}

auto snapshot_key(const BidSnapshot& s) {
    return std::make_tuple(s.interval_start, int(s.market), int(s.direction));
}

// Sort by key keeping the last of any duplicate run.
std::vector<BidSnapshot> sort_last_wins(std::vector<BidSnapshot> rows, std::size_t* duplicates) {
    std::stable_sort(rows.begin(), rows.end(), [](const BidSnapshot& a, const BidSnapshot& b) {
        return snapshot_key(a) < snapshot_key(b);
    });
    std::vector<BidSnapshot> out;
    out.reserve(rows.size());
    std::size_t dups = 0;
    for (auto& row : rows) {
        if (!out.empty() && snapshot_key(out.back()) == snapshot_key(row)) {
            out.back() = std::move(row);
            ++dups;
        } else {
            out.push_back(std::move(row));
        }
    }
    if (duplicates) *duplicates = dups;
    return out;
}

std::int64_t day_number(const Date& d) {
    return std::chrono::sys_days{d}.time_since_epoch().count();
}

Date date_from_number(std::int64_t n) {
    return Date{std::chrono::sys_days{std::chrono::days{n}}};
}

SeriesCoverage coverage_of(std::string label, const std::vector<Timestamp>& times,
                           std::chrono::seconds step, const TimeZone& tz) {
    SeriesCoverage cov;
    cov.label = std::move(label);
    cov.records = times.size();
    if (times.empty()) return cov;
    std::set<std::int64_t> days;
    for (auto t : times) days.insert(day_number(tz.local_date(t)));
    cov.first_date = date_from_number(*days.begin());
    cov.last_date = date_from_number(*days.rbegin());
    cov.days_with_data = days.size();
    for (std::size_t i = 1; i < times.size(); ++i) {
        const auto diff = times[i] - times[i - 1];
        if (diff > step) {
            const auto missing = std::size_t(diff / step) - (diff % step == diff.zero() ? 1 : 0);
            cov.gaps.push_back({times[i - 1] + step, times[i - 1] + step * missing, missing});
        }
    }
    return cov;
}

}  // namespace

std::string_view to_string(Market m) {
    switch (m) {
        case Market::kIfm: return "IFM";
        case Market::kRtpd: return "RTPD";
        case Market::kDamPrice: return "DAM";
        case Market::kRtPrice: return "RTM";
    }
    return "?";
}

std::string_view to_string(Direction d) {
    return d == Direction::kCharge ? "CHARGE" : "DISCHARGE";
}

std::string_view to_string(Aggregation a) {
    switch (a) {
        case Aggregation::kMin: return "MIN";
        case Aggregation::kMax: return "MAX";
        case Aggregation::kMean: return "MEAN";
    }
    return "?";
}

double BidSnapshot::total_mw() const {
    return std::accumulate(segment_mw.begin(), segment_mw.end(), 0.0);
}

ParsedBids parse_bid_report(std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty()) throw MalformedRow(1, "missing header");
    const Header header(rows.front());
    const std::size_t hl = rows.front().number;
    const std::size_t c_time = header.require("interval_start_utc", hl);
    const std::size_t c_market = header.require("market", hl);
    const std::size_t c_dir = header.require("direction", hl);
    std::array<std::size_t, kSegmentCount> c_seg{};
    for (std::size_t i = 0; i < kSegmentCount; ++i) c_seg[i] = header.require(kSegmentColumns[i], hl);
    const std::size_t c_self = header.require("self_schedule_mw", hl);
    const auto c_award = header.find("energy_award_mw");

    ParsedBids result;
    std::vector<BidSnapshot> parsed;
    parsed.reserve(rows.size() - 1);
    bool out_of_order = false;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& line = rows[r];
        const auto f = csv::split(line.text);
        if (f.size() != header.width()) {
            throw MalformedRow(line.number, "expected " + std::to_string(header.width()) +
                                                " fields, got " + std::to_string(f.size()));
        }
        BidSnapshot s;
        if (!parse_iso8601(f[c_time], s.interval_start)) {
            throw MalformedRow(line.number, "bad timestamp '" + std::string(f[c_time]) + "'");
        }
        if (f[c_market] == "IFM") {
            s.market = Market::kIfm;
        } else if (f[c_market] == "RTPD") {
            s.market = Market::kRtpd;
        } else {
            throw Error(ErrorKind::kUnknownMarket, "line " + std::to_string(line.number) +
                                                       ": unknown market '" + std::string(f[c_market]) + "'");
        }
        if (f[c_dir] == "CHARGE") {
            s.direction = Direction::kCharge;
        } else if (f[c_dir] == "DISCHARGE") {
            s.direction = Direction::kDischarge;
        } else {
            throw MalformedRow(line.number, "bad direction '" + std::string(f[c_dir]) + "'");
        }
        if (!aligned(s.interval_start, nominal_step(s.market))) {
            throw MalformedRow(line.number, std::string(to_string(s.market)) + " interval not aligned to " +
                                                std::to_string(nominal_step(s.market).count() / 60) + " min");
        }
        for (std::size_t i = 0; i < kSegmentCount; ++i) {
            s.segment_mw[i] = parse_mw(f[c_seg[i]], kSegmentColumns[i], line.number);
        }
        s.self_schedule_mw = parse_mw(f[c_self], "self_schedule_mw", line.number);
        if (c_award && !f[*c_award].empty()) {
            s.energy_award_mw = parse_mw(f[*c_award], "energy_award_mw", line.number);
        }
        if (!parsed.empty() && s.interval_start < parsed.back().interval_start) out_of_order = true;
        parsed.push_back(std::move(s));
    }
    if (out_of_order) {
        result.warnings.push_back("NonMonotoneTimestamps: rows were not in time order and have been sorted");
    }
    std::size_t duplicates = 0;
    result.snapshots = sort_last_wins(std::move(parsed), &duplicates);
    if (duplicates > 0) {
        result.warnings.push_back("DuplicateIntervals: " + std::to_string(duplicates) +
                                  " repeated rows replaced by their last occurrence");
    }
    for (const auto& w : result.warnings) spdlog::warn("bid report: {}", w);
    return result;
}

std::string serialize_bid_report(std::span<const BidSnapshot> snapshots) {
    const bool with_award = std::any_of(snapshots.begin(), snapshots.end(),
                                        [](const BidSnapshot& s) { return s.energy_award_mw.has_value(); });
    std::string out = "interval_start_utc,market,direction";
    for (auto col : kSegmentColumns) {
        out += ',';
        out += col;
    }
    out += ",self_schedule_mw";
    if (with_award) out += ",energy_award_mw";
    out += '\n';
    for (const auto& s : snapshots) {
        out += format_iso8601(s.interval_start);
        out += ',';
        out += to_string(s.market);
        out += ',';
        out += to_string(s.direction);
        for (double mw : s.segment_mw) {
            out += ',';
            out += csv::format_double(mw);
        }
        out += ',';
        out += csv::format_double(s.self_schedule_mw);
        if (with_award) {
            out += ',';
            if (s.energy_award_mw) out += csv::format_double(*s.energy_award_mw);
        }
        out += '\n';
    }
    return out;
}

std::vector<BidSnapshot> merge_bid_reports(const std::vector<std::vector<BidSnapshot>>& reports) {
    std::vector<BidSnapshot> all;
    for (const auto& r : reports) all.insert(all.end(), r.begin(), r.end());
    std::size_t duplicates = 0;
    auto merged = sort_last_wins(std::move(all), &duplicates);
    if (duplicates > 0) {
        spdlog::info("merge: {} duplicate intervals resolved in favour of the later report", duplicates);
    }
    return merged;
}

std::vector<PriceSample> parse_price_csv(std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty()) throw MalformedRow(1, "missing header");
    const Header header(rows.front());
    const std::size_t hl = rows.front().number;
    const std::size_t c_time = header.require("timestamp_utc", hl);
    const std::size_t c_market = header.require("market", hl);
    const std::size_t c_loc = header.require("location", hl);
    const std::size_t c_price = header.require("price_usd_mwh", hl);

    std::vector<PriceSample> samples;
    samples.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& line = rows[r];
        const auto f = csv::split(line.text);
        if (f.size() != header.width()) {
            throw MalformedRow(line.number, "expected " + std::to_string(header.width()) +
                                                " fields, got " + std::to_string(f.size()));
        }
        PriceSample s;
        if (!parse_iso8601(f[c_time], s.timestamp)) {
            throw MalformedRow(line.number, "bad timestamp '" + std::string(f[c_time]) + "'");
        }
        if (f[c_market] == "DAM") {
            s.market = Market::kDamPrice;
        } else if (f[c_market] == "RTM") {
            s.market = Market::kRtPrice;
        } else {
            throw Error(ErrorKind::kUnknownMarket, "line " + std::to_string(line.number) +
                                                       ": unknown market '" + std::string(f[c_market]) + "'");
        }
        if (f[c_loc].empty()) throw MalformedRow(line.number, "empty location");
        s.location = std::string(f[c_loc]);
        auto price = csv::parse_double(f[c_price]);
        if (!price) throw MalformedRow(line.number, "non-numeric price '" + std::string(f[c_price]) + "'");
        s.price = *price;
        if (!aligned(s.timestamp, nominal_step(s.market))) {
            throw Error(ErrorKind::kMixedGranularity,
                        "line " + std::to_string(line.number) + ": " + s.location + " " +
                            std::string(to_string(s.market)) + " sample off the " +
                            std::to_string(nominal_step(s.market).count() / 60) + "-minute grid");
        }
        samples.push_back(std::move(s));
    }
    std::stable_sort(samples.begin(), samples.end(), [](const PriceSample& a, const PriceSample& b) {
        return std::tie(a.market, a.location, a.timestamp) < std::tie(b.market, b.location, b.timestamp);
    });

    // Every spacing must be a whole number of nominal steps and the finest
    // spacing must be exactly one step.
    for (std::size_t begin = 0; begin < samples.size();) {
        std::size_t end = begin + 1;
        while (end < samples.size() && samples[end].market == samples[begin].market &&
               samples[end].location == samples[begin].location) {
            ++end;
        }
        const auto step = nominal_step(samples[begin].market);
        std::optional<std::chrono::seconds> finest;
        for (std::size_t i = begin + 1; i < end; ++i) {
            const auto diff = samples[i].timestamp - samples[i - 1].timestamp;
            if (diff.count() == 0) {
                throw Error(ErrorKind::kMixedGranularity, "duplicate timestamp " +
                                                              format_iso8601(samples[i].timestamp) + " at " +
                                                              samples[i].location);
            }
            if (!finest || diff < *finest) finest = diff;
        }
        if (finest && (*finest != step)) {
            throw Error(ErrorKind::kMixedGranularity,
                        samples[begin].location + " " + std::string(to_string(samples[begin].market)) +
                            " spacing " + std::to_string(finest->count() / 60) + " min, expected " +
                            std::to_string(step.count() / 60));
        }
        begin = end;
    }
    return samples;
}

std::string serialize_price_csv(std::span<const PriceSample> samples) {
    std::string out = "timestamp_utc,market,location,price_usd_mwh\n";
    for (const auto& s : samples) {
        out += format_iso8601(s.timestamp);
        out += ',';
        out += to_string(s.market);
        out += ',';
        out += s.location;
        out += ',';
        out += csv::format_double(s.price);
        out += '\n';
    }
    return out;
}

PriceSeries::PriceSeries(Market market, Aggregation aggregation, std::vector<PricePoint> samples)
    : market_(market), aggregation_(aggregation), samples_(std::move(samples)) {
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (samples_[i].timestamp <= samples_[i - 1].timestamp) {
            throw Error(ErrorKind::kInvariantViolation,
                        "price series timestamps not strictly increasing at " +
                            format_iso8601(samples_[i].timestamp));
        }
    }
}

PriceSeries aggregate_locations(std::span<const PriceSample> samples, Aggregation aggregation) {
    if (samples.empty()) throw Error(ErrorKind::kEmptyInput, "aggregate_locations: no samples");
    const Market market = samples.front().market;
    std::map<Timestamp, std::vector<double>> by_time;
    std::set<std::string_view> locations;
    for (const auto& s : samples) {
        if (s.market != market) {
            throw Error(ErrorKind::kMixedMarkets, "aggregate_locations: samples span several markets");
        }
        by_time[s.timestamp].push_back(s.price);
        locations.insert(s.location);
    }
    std::vector<PricePoint> points;
    points.reserve(by_time.size());
    std::size_t partial = 0;
    for (const auto& [t, prices] : by_time) {
        if (prices.size() < locations.size()) ++partial;
        double v = 0.0;
        switch (aggregation) {
            case Aggregation::kMin: v = *std::min_element(prices.begin(), prices.end()); break;
            case Aggregation::kMax: v = *std::max_element(prices.begin(), prices.end()); break;
            case Aggregation::kMean:
                v = std::accumulate(prices.begin(), prices.end(), 0.0) / double(prices.size());
                break;
        }
        points.push_back({t, v});
    }
    if (partial > 0) {
        spdlog::info("aggregate_locations: {} of {} timestamps aggregated over a subset of {} locations",
                     partial, by_time.size(), locations.size());
    }
    return PriceSeries(market, aggregation, std::move(points));
}

PriceSeries resample_hourly(const PriceSeries& series, std::vector<Timestamp>* missing_hours) {
    std::vector<PricePoint> out;
    const auto& s = series.samples();
    std::size_t gaps = 0;
    for (std::size_t i = 0; i < s.size();) {
        const Timestamp hour = floor_to_hour(s[i].timestamp);
        double sum = 0.0;
        std::size_t n = 0;
        for (; i < s.size() && floor_to_hour(s[i].timestamp) == hour; ++i) {
            sum += s[i].price;
            ++n;
        }
        if (!out.empty()) {
            for (Timestamp h = out.back().timestamp + hours{1}; h < hour; h += hours{1}) {
                ++gaps;
                if (missing_hours) missing_hours->push_back(h);
            }
        }
        out.push_back({hour, sum / double(n)});
    }
    if (gaps > 0) spdlog::warn("resample_hourly: {} empty hours omitted", gaps);
    return PriceSeries(series.market(), series.aggregation(), std::move(out));
}

std::vector<DailyMean> daily_aggregate(const PriceSeries& series, const TimeZone& tz) {
    if (series.empty()) throw Error(ErrorKind::kEmptyInput, "daily_aggregate: empty series");
    std::map<std::int64_t, std::pair<double, std::size_t>> by_day;
    for (const auto& p : series.samples()) {
        auto& acc = by_day[day_number(tz.local_date(p.timestamp))];
        acc.first += p.price;
        acc.second += 1;
    }
    std::vector<DailyMean> out;
    out.reserve(by_day.size());
    for (const auto& [day, acc] : by_day) {
        out.push_back({date_from_number(day), acc.first / double(acc.second), acc.second});
    }
    return out;
}

ValidationReport validate_dataset(std::span<const BidSnapshot> bids,
                                  std::span<const PriceSeries> prices, const TimeZone& tz) {
    ValidationReport report;
    report.bid_snapshots = bids.size();
    double self_sum = 0.0;
    double total_sum = 0.0;
    std::map<std::pair<int, int>, std::vector<Timestamp>> times;
    for (const auto& b : bids) {
        const double seg = b.total_mw();
        self_sum += b.self_schedule_mw;
        total_sum += seg + b.self_schedule_mw;
        if (seg + b.self_schedule_mw > 0.0) {
            report.max_interval_self_schedule_share = std::max(
                report.max_interval_self_schedule_share, b.self_schedule_mw / (seg + b.self_schedule_mw));
        }
        if (b.segment(11) > 0.0) ++report.segment11_count;
        times[{int(b.market), int(b.direction)}].push_back(b.interval_start);
    }
    report.self_schedule_share = total_sum > 0.0 ? self_sum / total_sum : 0.0;
    for (auto& [key, ts] : times) {
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        const auto market = Market(key.first);
        std::string label = std::string(to_string(market)) + "/" + std::string(to_string(Direction(key.second)));
        report.bid_coverage.push_back(coverage_of(std::move(label), ts, nominal_step(market), tz));
    }
    for (const auto& series : prices) {
        std::vector<Timestamp> ts;
        ts.reserve(series.size());
        for (const auto& p : series.samples()) ts.push_back(p.timestamp);
        // Resampled series are coarser than the market's native step, so the
        // expected cadence is the finest spacing actually present.
        std::chrono::seconds step = nominal_step(series.market());
        if (ts.size() >= 2) {
            step = ts[1] - ts[0];
            for (std::size_t i = 2; i < ts.size(); ++i) step = std::min(step, ts[i] - ts[i - 1]);
        }
        std::string label =
            std::string(to_string(series.market())) + "/" + std::string(to_string(series.aggregation()));
        report.price_coverage.push_back(coverage_of(std::move(label), ts, step, tz));
    }
    return report;
}

nlohmann::json to_json(const ValidationReport& report) {
    auto coverage = [](const std::vector<SeriesCoverage>& list) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : list) {
            nlohmann::json gaps = nlohmann::json::array();
            for (const auto& g : c.gaps) {
                gaps.push_back({{"first_missing", format_iso8601(g.first_missing)},
                                {"last_missing", format_iso8601(g.last_missing)},
                                {"missing_intervals", g.missing_intervals}});
            }
            arr.push_back({{"series", c.label},
                           {"first_date", c.first_date ? nlohmann::json(format_date(*c.first_date)) : nlohmann::json()},
                           {"last_date", c.last_date ? nlohmann::json(format_date(*c.last_date)) : nlohmann::json()},
                           {"days_with_data", c.days_with_data},
                           {"records", c.records},
                           {"gaps", std::move(gaps)}});
        }
        return arr;
    };
    return {{"bid_snapshots", report.bid_snapshots},
            {"bid_coverage", coverage(report.bid_coverage)},
            {"price_coverage", coverage(report.price_coverage)},
            {"self_schedule_share", report.self_schedule_share},
            {"max_interval_self_schedule_share", report.max_interval_self_schedule_share},
            {"segment11_count", report.segment11_count}};
}

}  // namespace storage_bid_lab
