#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storage_bid_lab/bid_metrics.hpp"
#include "storage_bid_lab/market_data.hpp"

namespace storage_bid_lab {

// ---------------------------------------------------------------------------
// Price spike days

struct SpikeCalendar {
    Market market = Market::kRtPrice;
    Aggregation aggregation = Aggregation::kMean;
    double k = 2.0;
    double mean = 0.0;
    double std_dev = 0.0;  // sample (n - 1) standard deviation of daily means
    double threshold = 0.0;  // mean + k * std_dev
    std::vector<Date> flagged_dates;  // ascending

    bool contains(const Date& d) const;
};

// Flags days whose mean price is strictly above mean + k * std over all
// days. A zero-variance series flags nothing. Needs at least two days.
SpikeCalendar detect_spike_days(std::span<const DailyMean> daily, double k = 2.0,
                                Market market = Market::kRtPrice, Aggregation aggregation = Aggregation::kMean);

struct SplitSample {
    std::vector<double> spike;
    std::vector<double> non_spike;
};

// Partitions spread values by whether their local date is flagged. Throws
// EmptyPartition if either side ends up empty.
SplitSample split_distribution(const SpreadSeries& spreads, const SpikeCalendar& calendar, const TimeZone& tz);

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov

struct KsResult {
    double d_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::size_t m = 0;
};

// Exact sup |F_x - F_y| via a merged sweep over the sorted samples.
double ks_statistic(std::span<const double> x, std::span<const double> y);

// Asymptotic Kolmogorov tail Q(sqrt(nm/(n+m)) * D), clamped to [0, 1].
double ks_p_value(double d, std::size_t n, std::size_t m);

KsResult ks_test(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Spectra of hourly series

enum class GapPolicy {
    kLongestSegment,  // analyze the longest gap-free run
    kLinearFill,      // interpolate missing hours
    kReject,          // any gap is an error
};

struct HourlyValue {
    Timestamp timestamp;
    double value = 0.0;
};

struct SpectralLine {
    double freq_cpd = 0.0;      // cycles per day
    double period_hours = 0.0;
    double magnitude = 0.0;     // amplitude of the matching sinusoid
};

struct SpectrumReport {
    std::vector<SpectralLine> lines;  // k = 1 .. N/2, ascending frequency
    std::size_t series_length = 0;
    double mean_removed = 0.0;
};

// Mean-removed, unwindowed single-sided amplitude spectrum of evenly spaced
// hourly values: 2/N |X_k| (1/N at Nyquist). Throws TooShort below 48
// samples.
SpectrumReport fft_spectrum(std::span<const double> hourly_values);

// Timestamped variant: resolves gaps per `policy` first. Throws
// GapPolicyViolation on off-hour or unordered timestamps, or on any gap
// under kReject.
SpectrumReport fft_spectrum(std::span<const HourlyValue> series, GapPolicy policy = GapPolicy::kLongestSegment);

// sum_t (x_t - mean)^2 reconstructed from the single-sided magnitudes.
double spectral_energy(const SpectrumReport& report);

// Half-open period range [min_period_hours, max_period_hours).
struct PeriodBand {
    std::string label;
    double min_period_hours = 0.0;
    double max_period_hours = 0.0;
};

std::vector<PeriodBand> default_bands();

struct BandPeak {
    PeriodBand band;
    std::optional<double> freq_cpd;  // empty when no line falls in the band
    double magnitude = 0.0;
};

std::vector<BandPeak> dominant_bins(const SpectrumReport& report, std::span<const PeriodBand> bands);

nlohmann::json to_json(const SpikeCalendar& calendar);

}  // namespace storage_bid_lab
