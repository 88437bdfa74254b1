#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "storage_bid_lab/error.hpp"
#include "storage_bid_lab/stats.hpp"

using namespace storage_bid_lab;
using namespace std::chrono;

namespace {

std::vector<DailyMean> daily_means(const std::vector<double>& means) {
    std::vector<DailyMean> out;
    const sys_days d0 = 2023y / 7 / 1;
    for (std::size_t i = 0; i < means.size(); ++i) out.push_back({year_month_day{d0 + std::chrono::days{i}}, means[i], 24});
    return out;
}

std::vector<double> sinusoid(std::size_t n, double amplitude, double period, double offset = 0.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = offset + amplitude * std::sin(2.0 * std::numbers::pi * double(t) / period);
    return x;
}

double magnitude_at(const SpectrumReport& r, double period) {
    for (const auto& l : r.lines) {
        if (std::abs(l.period_hours - period) < 1e-9) return l.magnitude;
    }
    ADD_FAILURE() << "no line at period " << period;
    return 0.0;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::kIo;
}

}  // namespace

TEST(DetectSpikeDays, ConstantSeriesFlagsNothing) {
    const auto cal = detect_spike_days(daily_means(std::vector<double>(10, 55.0)));
    EXPECT_EQ(cal.std_dev, 0.0);
    EXPECT_TRUE(cal.flagged_dates.empty());
}

TEST(DetectSpikeDays, TenDayHandComputed) {
    std::vector<double> means(10, 50.0);
    means[6] = 1000.0;
    const auto cal = detect_spike_days(daily_means(means));
    EXPECT_NEAR(cal.mean, oracle::mean(means), 1e-12);
    EXPECT_NEAR(cal.std_dev, oracle::sample_std(means), 1e-9);
    EXPECT_NEAR(cal.mean, 145.0, 1e-12);
    EXPECT_NEAR(cal.std_dev, 300.42, 0.01);
    EXPECT_NEAR(cal.threshold, 745.8, 0.1);
    ASSERT_EQ(cal.flagged_dates.size(), 1u);
    EXPECT_EQ(format_date(cal.flagged_dates[0]), "2023-07-07");
}

TEST(DetectSpikeDays, NeedsTwoDays) {
    EXPECT_EQ(kind_of([] { detect_spike_days(daily_means({40.0})); }), ErrorKind::kInsufficientData);
}

TEST(DetectSpikeDays, AffineInvariance) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::lognormal_distribution<double> heavy(3.5, 0.8);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> base(30 + trial % 20);
        for (auto& v : base) v = heavy(rng);
        const double a = 0.1 + 10.0 * unit(rng);
        const double b = -100.0 + 200.0 * unit(rng);
        std::vector<double> moved;
        for (double v : base) moved.push_back(a * v + b);
        const auto c1 = detect_spike_days(daily_means(base));
        const auto c2 = detect_spike_days(daily_means(moved));
        EXPECT_EQ(c1.flagged_dates, c2.flagged_dates);
    }
}

TEST(SplitDistribution, Partitions) {
    const TimeZone tz;
    auto make_spreads = [&](int n_days) {
        SpreadSeries s;
        const Timestamp start = tz.start_of_day(2023y / 7 / 1);
        for (int h = 0; h < 24 * n_days; ++h) s.points.push_back({start + hours{h}, double(h)});
        return s;
    };
    SpikeCalendar cal;
    cal.flagged_dates = {2023y / 7 / 1};
    const auto split = split_distribution(make_spreads(2), cal, tz);
    EXPECT_EQ(split.spike.size(), 24u);
    EXPECT_EQ(split.non_spike.size(), 24u);

    EXPECT_EQ(kind_of([&] { split_distribution(make_spreads(2), SpikeCalendar{}, tz); }), ErrorKind::kEmptyPartition);

    std::vector<double> month(30, 50.0);
    for (int d : {3, 11, 25}) month[std::size_t(d)] = 900.0;
    const auto monthly = detect_spike_days(daily_means(month), 1.0);
    ASSERT_EQ(monthly.flagged_dates.size(), 3u);
    const auto s30 = split_distribution(make_spreads(30), monthly, tz);
    EXPECT_EQ(s30.spike.size(), 72u);
    EXPECT_EQ(s30.non_spike.size(), 648u);
}

TEST(KsStatistic, Examples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(ks_statistic(a, a), 0.0);
    EXPECT_EQ(ks_statistic(a, std::vector<double>{4, 5, 6}), 1.0);
    EXPECT_DOUBLE_EQ(ks_statistic(std::vector<double>{1, 3}, std::vector<double>{2, 4}), 0.5);
    EXPECT_EQ(kind_of([&] { ks_statistic(a, std::vector<double>{}); }), ErrorKind::kEmptySample);
}

TEST(KsStatistic, MatchesBruteForceWithTies) {
    std::mt19937_64 rng(37);
    std::uniform_int_distribution<int> value(0, 20);
    std::uniform_int_distribution<int> size(1, 40);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> x(std::size_t(size(rng))), y(std::size_t(size(rng)));
        for (auto& v : x) v = value(rng);
        for (auto& v : y) v = value(rng) + (trial % 3);
        EXPECT_NEAR(ks_statistic(x, y), oracle::ks_brute(x, y), 1e-12);
        EXPECT_EQ(ks_statistic(x, y), ks_statistic(y, x));
    }
}

TEST(KsStatistic, InvariantUnderMonotoneTransforms) {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> x(25), y(35);
        for (auto& v : x) v = normal(rng);
        for (auto& v : y) v = normal(rng) + 0.5;
        auto transform = [](std::vector<double> v) {
            for (auto& a : v) a = std::exp(a) * 3.0 + std::atan(a);
            return v;
        };
        EXPECT_DOUBLE_EQ(ks_statistic(x, y), ks_statistic(transform(x), transform(y)));
    }
}

TEST(KsPValue, Examples) {
    EXPECT_EQ(ks_p_value(0.0, 10, 12), 1.0);
    const double x = std::sqrt(1.5);
    const double expected = 2.0 * (std::exp(-3.0) - std::exp(-12.0) + std::exp(-27.0));
    EXPECT_NEAR(ks_p_value(1.0, 3, 3), expected, 1e-12);
    EXPECT_NEAR(ks_p_value(1.0, 3, 3), 0.0996, 1e-3);
    EXPECT_NEAR(ks_test(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}).p_value, oracle::kolmogorov_tail(x),
                1e-12);
}

TEST(KsPValue, AgreesWithSeriesAndIsMonotone) {
    double previous = 1.0;
    for (double d = 0.01; d <= 1.0; d += 0.01) {
        const double p = ks_p_value(d, 50, 60);
        const double x = d * std::sqrt(50.0 * 60.0 / 110.0);
        if (x > 0.3) EXPECT_NEAR(p, std::clamp(oracle::kolmogorov_tail(x), 0.0, 1.0), 1e-9) << d;
        EXPECT_LE(p, previous + 1e-15);
        EXPECT_GE(p, 0.0);
        previous = p;
    }
    // Far tail keeps its leading term instead of collapsing to zero.
    EXPECT_GT(ks_p_value(1.0, 400, 400), 0.0);
    EXPECT_LT(ks_p_value(1.0, 400, 400), 1e-30);
}

TEST(FftSpectrum, PureDailySinusoid) {
    const auto r = fft_spectrum(sinusoid(14 * 24, 10.0, 24.0, 55.0));
    EXPECT_EQ(r.series_length, 336u);
    EXPECT_NEAR(r.mean_removed, 55.0, 1e-9);
    EXPECT_NEAR(magnitude_at(r, 24.0), 10.0, 1e-9);
    for (const auto& l : r.lines) {
        if (std::abs(l.period_hours - 24.0) > 1e-9) EXPECT_LE(l.magnitude, 0.2);
    }
    for (const auto& l : r.lines) {
        if (std::abs(l.period_hours - 24.0) < 1e-9) EXPECT_NEAR(l.freq_cpd, 1.0, 1e-12);
    }
}

TEST(FftSpectrum, ConstantAndLinearity) {
    for (const auto& l : fft_spectrum(std::vector<double>(96, 12.5)).lines) EXPECT_NEAR(l.magnitude, 0.0, 1e-12);

    auto x = sinusoid(336, 10.0, 24.0);
    const auto y = sinusoid(336, 4.0, 12.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    const auto r = fft_spectrum(x);
    EXPECT_NEAR(magnitude_at(r, 24.0), 10.0, 1e-9);
    EXPECT_NEAR(magnitude_at(r, 12.0), 4.0, 1e-9);
}

TEST(FftSpectrum, MatchesNaiveDft) {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> normal(50.0, 20.0);
    for (std::size_t n : {48u, 61u, 100u, 167u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = normal(rng);
        const auto r = fft_spectrum(x);
        const auto ref = oracle::dft_abs(x);
        ASSERT_EQ(r.lines.size(), n / 2);
        for (std::size_t k = 1; k <= n / 2; ++k) {
            const double scale = (n % 2 == 0 && k == n / 2) ? 1.0 / double(n) : 2.0 / double(n);
            EXPECT_NEAR(r.lines[k - 1].magnitude, scale * ref[k], 1e-9);
            EXPECT_NEAR(r.lines[k - 1].period_hours, double(n) / double(k), 1e-12);
        }
    }
}

TEST(FftSpectrum, Parseval) {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> normal(0.0, 30.0);
    for (std::size_t n : {48u, 49u, 336u, 337u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = normal(rng) + 100.0;
        const double m = oracle::mean(x);
        double energy = 0.0;
        for (double v : x) energy += (v - m) * (v - m);
        EXPECT_NEAR(spectral_energy(fft_spectrum(x)), energy, 1e-9 * energy);
    }
}

TEST(FftSpectrum, Errors) {
    EXPECT_EQ(kind_of([] { fft_spectrum(std::vector<double>(47, 1.0)); }), ErrorKind::kTooShort);

    const Timestamp t0 = sys_days{2023y / 8 / 1};
    std::vector<HourlyValue> gappy;
    for (int h = 0; h < 100; ++h) {
        if (h == 30) continue;
        gappy.push_back({t0 + hours{h}, std::sin(h * 0.2)});
    }
    EXPECT_EQ(kind_of([&] { fft_spectrum(gappy, GapPolicy::kReject); }), ErrorKind::kGapPolicyViolation);
    EXPECT_EQ(fft_spectrum(gappy, GapPolicy::kLongestSegment).series_length, 69u);
    EXPECT_EQ(fft_spectrum(gappy, GapPolicy::kLinearFill).series_length, 100u);

    std::vector<HourlyValue> off_hour = {{t0 + minutes{30}, 1.0}};
    EXPECT_EQ(kind_of([&] { fft_spectrum(off_hour, GapPolicy::kLinearFill); }), ErrorKind::kGapPolicyViolation);
}

TEST(DominantBins, BandsAndEmptyBand) {
    const auto r = fft_spectrum(sinusoid(336, 10.0, 24.0));
    const std::vector<PeriodBand> bands = {
        {"12h", 11.75, 12.25}, {"24h", 23.5, 24.5}, {"7d", 167.5, 168.5}, {"none", 1000.0, 2000.0}};
    const auto peaks = dominant_bins(r, bands);
    ASSERT_EQ(peaks.size(), 4u);
    EXPECT_NEAR(peaks[0].magnitude, 0.0, 1e-9);
    EXPECT_NEAR(peaks[1].magnitude, 10.0, 1e-9);
    EXPECT_NEAR(peaks[2].magnitude, 0.0, 1e-9);
    EXPECT_FALSE(peaks[3].freq_cpd.has_value());
    EXPECT_EQ(peaks[3].magnitude, 0.0);

    // Default bands tile every period without overlap.
    const auto defaults = default_bands();
    for (const auto& l : r.lines) {
        int hits = 0;
        for (const auto& b : defaults) hits += l.period_hours >= b.min_period_hours && l.period_hours < b.max_period_hours;
        EXPECT_EQ(hits, 1) << l.period_hours;
    }
}
