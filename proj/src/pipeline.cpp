#include "storage_bid_lab/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "storage_bid_lab/bid_metrics.hpp"
#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

namespace fs = std::filesystem;

namespace {

constexpr std::array<Aggregation, 3> kAggregations = {Aggregation::kMin, Aggregation::kMax, Aggregation::kMean};
constexpr std::array<Market, 2> kBidMarkets = {Market::kIfm, Market::kRtpd};
constexpr std::array<Direction, 2> kDirections = {Direction::kCharge, Direction::kDischarge};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class BundleWriter {
public:
    explicit BundleWriter(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::kIo, "cannot write " + (dir_ / name).string());
        out << content;
        files_.push_back(name);
    }

    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

std::string num(double v) { return csv::format_double(v); }

using SeriesKey = std::pair<Market, Aggregation>;

// Hourly location-aggregated price series for every market present.
std::map<SeriesKey, PriceSeries> hourly_price_series(const std::vector<PriceSample>& samples) {
    std::map<SeriesKey, PriceSeries> out;
    for (Market market : {Market::kDamPrice, Market::kRtPrice}) {
        std::vector<PriceSample> subset;
        for (const auto& s : samples) {
            if (s.market == market) subset.push_back(s);
        }
        if (subset.empty()) continue;
        for (Aggregation agg : kAggregations) {
            out.emplace(SeriesKey{market, agg}, resample_hourly(aggregate_locations(subset, agg)));
        }
    }
    return out;
}

const PriceSeries& hindsight_prices(const std::map<SeriesKey, PriceSeries>& prices) {
    for (Market market : {Market::kRtPrice, Market::kDamPrice}) {
        auto it = prices.find({market, Aggregation::kMean});
        if (it != prices.end()) return it->second;
    }
    throw Error(ErrorKind::kEmptyInput, "no price data for the hindsight DP");
}

HindsightOptions hindsight_options(const PipelineConfig& config) {
    HindsightOptions o;
    o.terminal_value = config.terminal_value;
    o.initial_soc = config.initial_soc;
    o.window_steps = config.window_hours;
    return o;
}

std::vector<WeightedBid> select(const std::vector<WeightedBid>& bids, Market market, Direction direction) {
    std::vector<WeightedBid> out;
    for (const auto& b : bids) {
        if (b.market == market && b.direction == direction) out.push_back(b);
    }
    return out;
}

std::string series_label(Market m, Direction d) {
    return std::string(to_string(m)) + "/" + std::string(to_string(d));
}

nlohmann::json config_echo(const PipelineConfig& c) {
    nlohmann::json bids = nlohmann::json::array();
    for (const auto& p : c.bid_paths) bids.push_back(p.generic_string());
    nlohmann::json prices = nlohmann::json::array();
    for (const auto& p : c.price_paths) prices.push_back(p.generic_string());
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : c.bands) {
        bands.push_back({{"label", b.label}, {"min_period_hours", b.min_period_hours},
                         {"max_period_hours", std::isinf(b.max_period_hours) ? nlohmann::json() : nlohmann::json(b.max_period_hours)}});
    }
    return {{"bids", bids},
            {"prices", prices},
            {"time_zone", c.time_zone},
            {"power_mw", c.storage.power_mw},
            {"energy_mwh", c.storage.energy_mwh},
            {"efficiency", c.storage.efficiency},
            {"discharge_cost", c.storage.discharge_cost},
            {"initial_soc", c.initial_soc.value_or(0.5 * c.storage.energy_mwh)},
            {"terminal_value", c.terminal_value},
            {"window_hours", c.window_hours},
            {"spike_k", c.spike_k},
            {"bands", bands}};
}

void write_metrics(BundleWriter& out, const std::vector<WeightedBid>& wbids, const TimeZone& tz) {
    std::string csv_bids = "interval_start_utc,market,direction,weighted_bid,total_mw\n";
    for (const auto& b : wbids) {
        csv_bids += format_iso8601(b.interval_start) + "," + std::string(to_string(b.market)) + "," +
                    std::string(to_string(b.direction)) + "," + num(b.value) + "," + num(b.total_mw) + "\n";
    }
    out.write("weighted_bids.csv", csv_bids);

    std::string csv_spreads = "interval_start_utc,market,spread\n";
    for (Market m : kBidMarkets) {
        for (const auto& p : spread_series(wbids, m).points) {
            csv_spreads += format_iso8601(p.interval_start) + "," + std::string(to_string(m)) + "," + num(p.spread) + "\n";
        }
    }
    out.write("bid_spreads.csv", csv_spreads);

    std::string csv_profiles = "market,direction,hour,stat,value\n";
    nlohmann::json json_profiles = nlohmann::json::object();
    for (Market m : kBidMarkets) {
        for (Direction d : kDirections) {
            const auto profile = hour_of_day_profile(select(wbids, m, d), tz);
            json_profiles[series_label(m, d)] = to_json(profile);
            for (std::size_t h = 0; h < 24; ++h) {
                if (!profile[h]) continue;
                const auto& s = *profile[h];
                const std::pair<const char*, double> stats[] = {{"count", double(s.count)}, {"mean", s.mean},
                                                                {"min", s.min},           {"q1", s.q1},
                                                                {"median", s.median},     {"q3", s.q3},
                                                                {"max", s.max}};
                for (const auto& [stat, value] : stats) {
                    csv_profiles += std::string(to_string(m)) + "," + std::string(to_string(d)) + "," +
                                    std::to_string(h) + "," + stat + "," + num(value) + "\n";
                }
            }
        }
    }
    out.write("hour_of_day_profiles.csv", csv_profiles);
    out.write_json("hour_of_day_profiles.json", json_profiles);

    nlohmann::json dominance = {{"comparison", "hourly mean, strict inequality"}};
    for (Direction d : kDirections) {
        std::vector<WeightedBid> ifm_d = select(wbids, Market::kIfm, d);
        std::vector<WeightedBid> rtpd_d = select(wbids, Market::kRtpd, d);
        dominance[d == Direction::kCharge ? "charge" : "discharge"] = to_json(cross_market_dominance(ifm_d, rtpd_d, d));
    }
    out.write_json("dominance.json", dominance);
}

void write_hindsight(BundleWriter& out, const HindsightRun& run, bool export_curves) {
    std::string csv = "t,charge_bid,discharge_bid\n";
    for (const auto& b : run.bids) {
        csv += format_iso8601(b.timestamp) + "," + num(b.charge_bid) + "," + num(b.discharge_bid) + "\n";
    }
    out.write("hindsight_bids.csv", csv);
    if (export_curves) {
        std::string vf = "t,soc_breakpoint,q\n";
        for (std::size_t t = 0; t < run.curves.size(); ++t) {
            for (const auto& s : run.curves[t].steps()) {
                vf += format_iso8601(run.bids[t].timestamp) + "," + num(s.soc) + "," + num(s.value) + "\n";
            }
        }
        out.write("value_function.csv", vf);
    }
}

std::vector<HourlyValue> to_hourly_values(const std::vector<WeightedBid>& bids) {
    std::vector<HourlyValue> out;
    for (const auto& b : hourly_average(bids)) out.push_back({b.interval_start, b.value});
    return out;
}

void write_stats(BundleWriter& out, const PipelineConfig& config, const std::vector<WeightedBid>& wbids,
                 const std::map<SeriesKey, PriceSeries>& prices, const HindsightRun& run, const TimeZone& tz,
                 nlohmann::json& skipped) {
    std::vector<SpikeCalendar> calendars;
    nlohmann::json cal_json = nlohmann::json::array();
    for (const auto& [key, series] : prices) {
        const auto daily = daily_aggregate(series, tz);
        calendars.push_back(detect_spike_days(daily, config.spike_k, key.first, key.second));
        cal_json.push_back(to_json(calendars.back()));
    }
    out.write_json("spike_calendars.json", cal_json);

    std::string ks = "calendar_market,aggregation,spread_market,n_spike,n_non_spike,d_statistic,p_value,status\n";
    for (const auto& cal : calendars) {
        for (Market m : kBidMarkets) {
            const auto spreads = hourly_average(spread_series(wbids, m));
            std::string row = std::string(to_string(cal.market)) + "," + std::string(to_string(cal.aggregation)) +
                              "," + std::string(to_string(m)) + ",";
            try {
                const auto split = split_distribution(spreads, cal, tz);
                const auto r = ks_test(split.spike, split.non_spike);
                row += std::to_string(r.n) + "," + std::to_string(r.m) + "," + num(r.d_statistic) + "," +
                       num(r.p_value) + ",ok";
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::kEmptyPartition) throw;
                row += ",,,,empty_partition";
            }
            ks += row + "\n";
        }
    }
    out.write("ks_results.csv", ks);

    std::vector<std::pair<std::string, std::vector<HourlyValue>>> series;
    for (Direction d : kDirections) {
        series.emplace_back("historical_RTPD_" + std::string(to_string(d)),
                            to_hourly_values(select(wbids, Market::kRtpd, d)));
    }
    for (Direction d : kDirections) {
        std::vector<HourlyValue> values;
        for (const auto& b : run.bids) {
            values.push_back({b.timestamp, d == Direction::kCharge ? b.charge_bid : b.discharge_bid});
        }
        series.emplace_back("hindsight_" + std::string(to_string(d)), std::move(values));
    }
    std::string spectra = "series,band,freq_cpd,magnitude\n";
    for (const auto& [label, values] : series) {
        try {
            const auto report = fft_spectrum(values, config.gap_policy);
            for (const auto& peak : dominant_bins(report, config.bands)) {
                spectra += label + "," + peak.band.label + "," + (peak.freq_cpd ? num(*peak.freq_cpd) : "") + "," +
                           num(peak.magnitude) + "\n";
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::kTooShort) throw;
            spdlog::warn("spectrum {} skipped: {}", label, e.what());
            skipped.push_back({{"analysis", "spectrum"}, {"series", label}, {"reason", e.what()}});
        }
    }
    out.write("spectra.csv", spectra);
}

}  // namespace

void PipelineConfig::validate() const {
    if (bid_paths.empty()) throw Error(ErrorKind::kInvalidConfig, "no bid report given (--bids)");
    if (price_paths.empty()) throw Error(ErrorKind::kInvalidConfig, "no price file given (--prices)");
    for (const auto* list : {&bid_paths, &price_paths}) {
        for (const auto& p : *list) {
            if (!fs::exists(p)) throw Error(ErrorKind::kInvalidConfig, "input does not exist: " + p.string());
        }
    }
    storage.validate();
    if (initial_soc && !(*initial_soc >= 0.0 && *initial_soc <= storage.energy_mwh)) {
        throw Error(ErrorKind::kInvalidConfig, "initial SoC must lie in [0, E]");
    }
    if (!(spike_k > 0.0)) throw Error(ErrorKind::kInvalidConfig, "spike multiplier must be > 0");
    if (!std::isfinite(terminal_value)) throw Error(ErrorKind::kInvalidConfig, "terminal value must be finite");
    TimeZone check(time_zone);
}

Dataset load_dataset(const PipelineConfig& config) {
    Dataset ds;
    std::vector<std::vector<BidSnapshot>> reports;
    for (const auto& path : config.bid_paths) {
        auto parsed = parse_bid_report(read_file(path));
        for (auto& w : parsed.warnings) ds.warnings.push_back(path.filename().string() + ": " + w);
        reports.push_back(std::move(parsed.snapshots));
    }
    ds.bids = merge_bid_reports(reports);
    for (const auto& path : config.price_paths) {
        auto samples = parse_price_csv(read_file(path));
        ds.prices.insert(ds.prices.end(), samples.begin(), samples.end());
    }
    // Later files win on a repeated (market, location, timestamp).
    std::stable_sort(ds.prices.begin(), ds.prices.end(), [](const PriceSample& a, const PriceSample& b) {
        return std::tie(a.market, a.location, a.timestamp) < std::tie(b.market, b.location, b.timestamp);
    });
    std::vector<PriceSample> unique;
    for (auto& s : ds.prices) {
        if (!unique.empty() && unique.back().market == s.market && unique.back().location == s.location &&
            unique.back().timestamp == s.timestamp) {
            unique.back() = std::move(s);
        } else {
            unique.push_back(std::move(s));
        }
    }
    ds.prices = std::move(unique);
    return ds;
}

std::vector<std::string> run_pipeline(const PipelineConfig& config, Stage stage) {
    config.validate();
    const TimeZone tz(config.time_zone);
    const Dataset ds = load_dataset(config);
    const auto prices = hourly_price_series(ds.prices);
    BundleWriter out(config.output_dir);
    nlohmann::json skipped = nlohmann::json::array();

    const bool all = stage == Stage::kAll;
    if (all || stage == Stage::kIngest) {
        std::vector<PriceSeries> series;
        for (const auto& [key, s] : prices) series.push_back(s);
        auto report = to_json(validate_dataset(ds.bids, series, tz));
        report["warnings"] = ds.warnings;
        out.write_json("validation.json", report);
    }
    const auto wbids = weighted_bids(ds.bids);
    if (all || stage == Stage::kMetrics) write_metrics(out, wbids, tz);

    std::optional<HindsightRun> run;
    if (all || stage == Stage::kHindsight || stage == Stage::kStats) {
        run = run_hindsight(hindsight_prices(prices), config.storage, hindsight_options(config));
    }
    if (all || stage == Stage::kHindsight) write_hindsight(out, *run, config.export_value_function);
    if (all || stage == Stage::kStats) write_stats(out, config, wbids, prices, *run, tz, skipped);

    nlohmann::json manifest = {{"config", config_echo(config)}, {"files", out.files()}, {"skipped", skipped}};
    out.write_json("manifest.json", manifest);
    return out.files();
}

CaseStudySummary run_case_study(const PipelineConfig& config, const Date& date) {
    config.validate();
    const TimeZone tz(config.time_zone);
    const Dataset ds = load_dataset(config);
    const auto prices = hourly_price_series(ds.prices);
    const auto wbids = weighted_bids(ds.bids);

    const Timestamp day_start = tz.start_of_day(date);
    const Timestamp day_end = tz.start_of_day(Date{std::chrono::sys_days{date} + std::chrono::days{1}});
    auto in_day = [&](Timestamp t) { return t >= day_start && t < day_end; };

    const bool has_data =
        std::any_of(ds.bids.begin(), ds.bids.end(), [&](const BidSnapshot& b) { return in_day(b.interval_start); }) ||
        std::any_of(ds.prices.begin(), ds.prices.end(), [&](const PriceSample& p) { return in_day(p.timestamp); });
    if (!has_data) throw Error(ErrorKind::kDateOutOfRange, "no data on " + format_date(date));

    auto lookup = [](const std::map<SeriesKey, PriceSeries>& m, Market market) {
        std::map<Timestamp, double> out;
        auto it = m.find({market, Aggregation::kMean});
        if (it != m.end()) {
            for (const auto& p : it->second.samples()) out[p.timestamp] = p.price;
        }
        return out;
    };
    const auto rt = lookup(prices, Market::kRtPrice);
    const auto da = lookup(prices, Market::kDamPrice);

    std::map<Timestamp, double> hist_charge, hist_discharge;
    for (const auto& b : hourly_average(wbids)) {
        if (b.market != Market::kRtpd) continue;
        (b.direction == Direction::kCharge ? hist_charge : hist_discharge)[b.interval_start] = b.value;
    }
    std::map<Timestamp, std::pair<double, std::size_t>> cleared_charge_acc, cleared_discharge_acc;
    for (const auto& b : ds.bids) {
        if (b.market != Market::kRtpd || !b.energy_award_mw) continue;
        auto& acc = (b.direction == Direction::kCharge ? cleared_charge_acc
                                                       : cleared_discharge_acc)[floor_to_hour(b.interval_start)];
        acc.first += *b.energy_award_mw;
        acc.second += 1;
    }
    auto mean_of = [](const std::map<Timestamp, std::pair<double, std::size_t>>& m, Timestamp t) -> std::optional<double> {
        auto it = m.find(t);
        if (it == m.end()) return std::nullopt;
        return it->second.first / double(it->second.second);
    };

    std::map<Timestamp, HindsightBid> hindsight;
    if (!prices.empty()) {
        for (const auto& b : hindsight_bid_series(hindsight_prices(prices), config.storage, hindsight_options(config))) {
            hindsight[b.timestamp] = b;
        }
    }

    // Hour-level spike rule over all hourly mean RT prices.
    double threshold = std::numeric_limits<double>::infinity();
    if (rt.size() >= 2) {
        double sum = 0.0;
        for (const auto& [t, p] : rt) sum += p;
        const double mean = sum / double(rt.size());
        double ss = 0.0;
        for (const auto& [t, p] : rt) ss += (p - mean) * (p - mean);
        const double sd = std::sqrt(ss / double(rt.size() - 1));
        if (sd > 0.0) threshold = mean + config.spike_k * sd;
    }

    CaseStudySummary summary;
    summary.date = date;
    auto opt = [](std::optional<double> v) { return v ? num(*v) : std::string(); };
    auto find = [](const std::map<Timestamp, double>& m, Timestamp t) -> std::optional<double> {
        auto it = m.find(t);
        if (it == m.end()) return std::nullopt;
        return it->second;
    };

    std::string csv =
        "timestamp_utc,local_hour,rt_price,da_price,rtpd_charge_bid,rtpd_discharge_bid,cleared_charge_mw,"
        "cleared_discharge_mw,hindsight_charge_bid,hindsight_discharge_bid,spike_hour\n";
    std::optional<double> previous_discharge;
    for (Timestamp t = day_start; t < day_end; t += std::chrono::hours{1}) {
        const int hour = tz.local_hour(t);
        const auto rt_price = find(rt, t);
        const auto discharge = find(hist_discharge, t);
        const auto cleared_discharge = mean_of(cleared_discharge_acc, t);
        std::optional<double> hs_charge, hs_discharge;
        if (auto it = hindsight.find(t); it != hindsight.end()) {
            hs_charge = it->second.charge_bid;
            hs_discharge = it->second.discharge_bid;
        }
        const bool spike = rt_price && *rt_price > threshold;
        if (spike) {
            if (summary.spike_hours.empty()) summary.pre_spike_discharge_bid = previous_discharge;
            summary.spike_hours.push_back(hour);
            if (discharge) {
                summary.min_spike_discharge_bid = summary.min_spike_discharge_bid
                                                      ? std::min(*summary.min_spike_discharge_bid, *discharge)
                                                      : *discharge;
            }
            if (cleared_discharge) {
                summary.max_spike_cleared_discharge_mw =
                    std::max(summary.max_spike_cleared_discharge_mw.value_or(0.0), *cleared_discharge);
            }
            if (discharge && hs_discharge && *discharge > *hs_discharge) {
                summary.withholding_gap = true;
                summary.max_withholding_gap = std::max(summary.max_withholding_gap, *discharge - *hs_discharge);
                summary.withholding_gap_hours.push_back(hour);
            }
        }
        if (summary.spike_hours.empty()) previous_discharge = discharge;
        csv += format_iso8601(t) + "," + std::to_string(hour) + "," + opt(rt_price) + "," + opt(find(da, t)) + "," +
               opt(find(hist_charge, t)) + "," + opt(discharge) + "," + opt(mean_of(cleared_charge_acc, t)) + "," +
               opt(cleared_discharge) + "," + opt(hs_charge) + "," + opt(hs_discharge) + "," + (spike ? "1" : "0") +
               "\n";
    }
    if (summary.pre_spike_discharge_bid && summary.min_spike_discharge_bid) {
        summary.discharge_bid_change = *summary.pre_spike_discharge_bid - *summary.min_spike_discharge_bid;
    }

    BundleWriter out(config.output_dir);
    const std::string stem = "case_study_" + format_date(date);
    out.write(stem + ".csv", csv);
    auto j = to_json(summary);
    j["spike_hour_threshold"] = std::isinf(threshold) ? nlohmann::json() : nlohmann::json(threshold);
    out.write_json(stem + ".json", j);
    return summary;
}

nlohmann::json to_json(const CaseStudySummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
    return {{"date", format_date(s.date)},
            {"spike_hours", s.spike_hours},
            {"pre_spike_discharge_bid", opt(s.pre_spike_discharge_bid)},
            {"min_spike_discharge_bid", opt(s.min_spike_discharge_bid)},
            {"discharge_bid_change", opt(s.discharge_bid_change)},
            {"max_spike_cleared_discharge_mw", opt(s.max_spike_cleared_discharge_mw)},
            {"withholding_gap", {{"flag", s.withholding_gap},
                                 {"max_usd_per_mw", s.max_withholding_gap},
                                 {"hours", s.withholding_gap_hours}}}};
}

}  // namespace storage_bid_lab
