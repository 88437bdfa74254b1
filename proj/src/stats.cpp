#include "storage_bid_lab/stats.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

namespace {

constexpr std::size_t kMinSpectrumLength = 48;

std::int64_t day_number(const Date& d) { return std::chrono::sys_days{d}.time_since_epoch().count(); }

// FFTW planning is not thread-safe; execution on a private plan is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* plan) const {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
};

std::vector<std::complex<double>> real_dft(std::vector<double> input) {
    const int n = int(input.size());
    std::vector<std::complex<double>> output(std::size_t(n / 2 + 1));
    std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(n, input.data(), reinterpret_cast<fftw_complex*>(output.data()),
                                        FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());
    return output;
}

std::vector<std::vector<double>> contiguous_runs(std::span<const HourlyValue> series) {
    std::vector<std::vector<double>> runs;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i == 0 || series[i].timestamp - series[i - 1].timestamp != std::chrono::hours{1}) runs.emplace_back();
        runs.back().push_back(series[i].value);
    }
    return runs;
}

}  // namespace

bool SpikeCalendar::contains(const Date& d) const {
    return std::binary_search(flagged_dates.begin(), flagged_dates.end(), d,
                              [](const Date& a, const Date& b) { return day_number(a) < day_number(b); });
}

SpikeCalendar detect_spike_days(std::span<const DailyMean> daily, double k, Market market, Aggregation aggregation) {
    if (daily.size() < 2) {
        throw Error(ErrorKind::kInsufficientData, "detect_spike_days needs at least 2 days, got " +
                                                      std::to_string(daily.size()));
    }
    SpikeCalendar cal;
    cal.market = market;
    cal.aggregation = aggregation;
    cal.k = k;
    double sum = 0.0;
    for (const auto& d : daily) sum += d.mean;
    cal.mean = sum / double(daily.size());
    double ss = 0.0;
    for (const auto& d : daily) ss += (d.mean - cal.mean) * (d.mean - cal.mean);
    cal.std_dev = std::sqrt(ss / double(daily.size() - 1));
    cal.threshold = cal.mean + k * cal.std_dev;
    if (cal.std_dev > 0.0) {
        for (const auto& d : daily) {
            if (d.mean > cal.threshold) cal.flagged_dates.push_back(d.date);
        }
    }
    std::sort(cal.flagged_dates.begin(), cal.flagged_dates.end(),
              [](const Date& a, const Date& b) { return day_number(a) < day_number(b); });
    return cal;
}

SplitSample split_distribution(const SpreadSeries& spreads, const SpikeCalendar& calendar, const TimeZone& tz) {
    SplitSample out;
    for (const auto& p : spreads.points) {
        (calendar.contains(tz.local_date(p.interval_start)) ? out.spike : out.non_spike).push_back(p.spread);
    }
    if (out.spike.empty() || out.non_spike.empty()) {
        throw Error(ErrorKind::kEmptyPartition, "split_distribution: " + std::to_string(out.spike.size()) +
                                                    " spike / " + std::to_string(out.non_spike.size()) +
                                                    " non-spike values");
    }
    return out;
}

double ks_statistic(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw Error(ErrorKind::kEmptySample, "ks_statistic: empty sample");
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> b(y.begin(), y.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = double(a.size());
    const double m = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(double(i) / n - double(j) / m));
    }
    return d;
}

double ks_p_value(double d, std::size_t n, std::size_t m) {
    if (n == 0 || m == 0) throw Error(ErrorKind::kEmptySample, "ks_p_value: empty sample");
    if (!(d > 0.0)) return 1.0;
    const double x = d * std::sqrt(double(n) * double(m) / double(n + m));
    double p = 0.0;
    if (x < 1.18) {
        // Same distribution through its Jacobi-theta dual, which converges
        // fast where the alternating series does not.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * pi2 / (8.0 * x * x));
            cdf += term;
            if (term < 1e-16 * cdf) break;
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
        p = 1.0 - cdf;
    } else {
        double sign = 1.0;
        for (int k = 1; k < 1000; ++k) {
            const double term = std::exp(-2.0 * k * k * x * x);
            p += sign * term;
            // Relative cut-off keeps the leading term for tiny tails.
            if (term < 1e-12 * std::abs(p) || term == 0.0) break;
            sign = -sign;
        }
        p *= 2.0;
    }
    return std::clamp(p, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> x, std::span<const double> y) {
    KsResult r;
    r.d_statistic = ks_statistic(x, y);
    r.n = x.size();
    r.m = y.size();
    r.p_value = ks_p_value(r.d_statistic, r.n, r.m);
    return r;
}

SpectrumReport fft_spectrum(std::span<const double> hourly_values) {
    const std::size_t n = hourly_values.size();
    if (n < kMinSpectrumLength) {
        throw Error(ErrorKind::kTooShort, "fft_spectrum needs at least " + std::to_string(kMinSpectrumLength) +
                                              " hourly values, got " + std::to_string(n));
    }
    SpectrumReport report;
    report.series_length = n;
    double sum = 0.0;
    for (double v : hourly_values) sum += v;
    report.mean_removed = sum / double(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = hourly_values[i] - report.mean_removed;

    const auto coeffs = real_dft(std::move(centered));
    const double dn = double(n);
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const bool nyquist = (n % 2 == 0) && k == n / 2;
        SpectralLine line;
        line.freq_cpd = double(k) * 24.0 / dn;
        line.period_hours = dn / double(k);
        line.magnitude = (nyquist ? 1.0 : 2.0) / dn * std::abs(coeffs[k]);
        report.lines.push_back(line);
    }
    return report;
}

SpectrumReport fft_spectrum(std::span<const HourlyValue> series, GapPolicy policy) {
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].timestamp.time_since_epoch().count() % 3600 != 0) {
            throw Error(ErrorKind::kGapPolicyViolation,
                        "fft_spectrum: off-hour timestamp " + format_iso8601(series[i].timestamp));
        }
        if (i > 0 && series[i].timestamp <= series[i - 1].timestamp) {
            throw Error(ErrorKind::kGapPolicyViolation,
                        "fft_spectrum: timestamps not increasing at " + format_iso8601(series[i].timestamp));
        }
    }
    const auto runs = contiguous_runs(series);
    switch (policy) {
        case GapPolicy::kReject:
            if (runs.size() > 1) {
                throw Error(ErrorKind::kGapPolicyViolation,
                            "fft_spectrum: series has " + std::to_string(runs.size() - 1) + " gaps");
            }
            return fft_spectrum(runs.empty() ? std::vector<double>{} : runs.front());
        case GapPolicy::kLongestSegment: {
            if (runs.empty()) return fft_spectrum(std::vector<double>{});
            auto longest = std::max_element(runs.begin(), runs.end(),
                                            [](const auto& a, const auto& b) { return a.size() < b.size(); });
            return fft_spectrum(*longest);
        }
        case GapPolicy::kLinearFill: {
            std::vector<double> filled;
            for (std::size_t i = 0; i < series.size(); ++i) {
                if (i > 0) {
                    const auto missing = (series[i].timestamp - series[i - 1].timestamp) / std::chrono::hours{1} - 1;
                    for (std::int64_t g = 1; g <= missing; ++g) {
                        const double w = double(g) / double(missing + 1);
                        filled.push_back(series[i - 1].value + w * (series[i].value - series[i - 1].value));
                    }
                }
                filled.push_back(series[i].value);
            }
            return fft_spectrum(filled);
        }
    }
    return {};
}

double spectral_energy(const SpectrumReport& report) {
    const double n = double(report.series_length);
    double energy = 0.0;
    for (const auto& line : report.lines) {
        const bool nyquist = report.series_length % 2 == 0 && line.period_hours == 2.0;
        energy += line.magnitude * line.magnitude * (nyquist ? n : n / 2.0);
    }
    return energy;
}

std::vector<PeriodBand> default_bands() {
    const double inf = std::numeric_limits<double>::infinity();
    return {
        {"7d+", 168.0, inf},
        {"24.5h-7d", 24.5, 168.0},
        {"24h", 23.5, 24.5},
        {"12.25h-23.5h", 12.25, 23.5},
        {"12h", 11.75, 12.25},
        {"<12h", 0.0, 11.75},
    };
}

std::vector<BandPeak> dominant_bins(const SpectrumReport& report, std::span<const PeriodBand> bands) {
    std::vector<BandPeak> out;
    out.reserve(bands.size());
    for (const auto& band : bands) {
        BandPeak peak;
        peak.band = band;
        for (const auto& line : report.lines) {
            if (line.period_hours < band.min_period_hours || line.period_hours >= band.max_period_hours) continue;
            if (!peak.freq_cpd || line.magnitude > peak.magnitude) {
                peak.freq_cpd = line.freq_cpd;
                peak.magnitude = line.magnitude;
            }
        }
        out.push_back(std::move(peak));
    }
    return out;
}

nlohmann::json to_json(const SpikeCalendar& c) {
    nlohmann::json dates = nlohmann::json::array();
    for (const auto& d : c.flagged_dates) dates.push_back(format_date(d));
    return {{"market", to_string(c.market)}, {"aggregation", to_string(c.aggregation)},
            {"k", c.k},  {"mean", c.mean},
            {"std_dev", c.std_dev}, {"threshold", c.threshold},
            {"flagged_dates", std::move(dates)}};
}

}  // namespace storage_bid_lab
