// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit status 1 if
// anything failed.
//
// Criterion 7 needs the CAISO archive. Point STORAGE_BID_LAB_CAISO_BIDS and
// STORAGE_BID_LAB_CAISO_PRICES at the converted CSVs (comma-separated lists
// allowed) to run it; otherwise it reports SKIP.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fixture.hpp"
#include "oracles.hpp"
#include "storage_bid_lab/arbitrage_dp.hpp"
#include "storage_bid_lab/bid_metrics.hpp"
#include "storage_bid_lab/error.hpp"
#include "storage_bid_lab/pipeline.hpp"
#include "storage_bid_lab/stats.hpp"

using namespace storage_bid_lab;
using namespace std::chrono;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

StorageParams params(double p, double e, double eta, double c) {
    StorageParams s;
    s.power_mw = p;
    s.energy_mwh = e;
    s.efficiency = eta;
    s.discharge_cost = c;
    return s;
}

std::vector<DailyMean> daily_means(const std::vector<double>& means) {
    std::vector<DailyMean> out;
    const sys_days d0 = 2023y / 7 / 1;
    for (std::size_t i = 0; i < means.size(); ++i) out.push_back({year_month_day{d0 + std::chrono::days{i}}, means[i], 24});
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. Oracle equivalence on random instances.
Outcome oracle_equivalence() {
    const auto start = steady_clock::now();
    std::mt19937_64 rng(20230816);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> horizon(1, 48);
    constexpr std::size_t kSteps = 2001;
    int failures = 0;
    double worst = 0.0;  // largest |diff| / tolerance
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = params(0.5 + 4.5 * unit(rng), 1.0 + 9.0 * unit(rng), 0.7 + 0.3 * unit(rng), 20.0 * unit(rng));
        std::vector<double> prices(std::size_t(horizon(rng)));
        for (auto& v : prices) v = -50.0 + 550.0 * unit(rng);
        const double e0 = unit(rng) * p.energy_mwh;
        // The lattice start is e0 rounded; the DP starts from the same point
        // so both solve one problem.
        const auto grid = grid_oracle(prices, p, e0, kSteps);
        const double dp_on_lattice =
            forward_dispatch(prices, compute_value_series(prices, p), p, grid.initial_soc).total_profit();
        const double tol = std::max(1e-3 * std::abs(dp_on_lattice),
                                    grid_bound(prices, p, kSteps, dp_on_lattice, grid.initial_soc));
        const double diff = std::abs(dp_on_lattice - grid.profit);
        worst = std::max(worst, tol > 0.0 ? diff / tol : (diff > 0.0 ? 1e9 : 0.0));
        if (diff > tol || dp_on_lattice < grid.profit - 1e-6) ++failures;
    }
    const double secs = duration<double>(steady_clock::now() - start).count();
    return pass_if(failures == 0 && secs < 60.0, std::to_string(200 - failures) + "/200 within tolerance, worst " +
                                                     fmt("%.3f", worst) + " of tolerance, " + fmt("%.1f", secs) +
                                                     " s");
}

// 2. Worked two-step instance.
Outcome worked_instance() {
    using Steps = std::vector<MarginalValueCurve::Step>;
    const auto p = params(1, 2, 1, 0);
    const std::vector<double> prices{10.0, 50.0};
    const auto curves = compute_value_series(prices, p);
    const auto s = forward_dispatch(prices, curves, p, 0.0);
    const double exhaustive = oracle::exhaustive_best(prices, {1.0, 2.0, 1.0, 0.0}, 0.0, 0.25);
    const bool ok = s.total_profit() == 40.0 && exhaustive == 40.0 &&
                    curves[1].steps() == Steps{{0.0, 50.0}, {1.0, 0.0}} &&
                    curves[0].steps() == Steps{{0.0, 10.0}, {2.0, 0.0}} && curves[0](1.999) == 10.0;
    return pass_if(ok, "profit " + fmt("%g", s.total_profit()) + ", exhaustive " + fmt("%g", exhaustive) +
                           ", q_1 steps " + std::to_string(curves[1].steps().size()) + ", q_0 steps " +
                           std::to_string(curves[0].steps().size()));
}

// 3. Monotonicity of 10,000 random updates.
Outcome monotonicity() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 12);
    int violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto p = params(0.5 + 4.5 * unit(rng), 1.0 + 9.0 * unit(rng), 0.7 + 0.3 * unit(rng), 20.0 * unit(rng));
        const int n = count(rng);
        std::vector<double> socs{0.0}, values;
        for (int i = 1; i < n; ++i) socs.push_back(unit(rng) * p.energy_mwh);
        std::sort(socs.begin(), socs.end());
        socs.erase(std::unique(socs.begin(), socs.end()), socs.end());
        for (std::size_t i = 0; i < socs.size(); ++i) values.push_back(-100.0 + 700.0 * unit(rng));
        std::sort(values.rbegin(), values.rend());
        std::vector<MarginalValueCurve::Step> steps;
        for (std::size_t i = 0; i < socs.size(); ++i) steps.push_back({socs[i], values[i]});
        const double m = sentinel_magnitude(p, 700.0, 0.0);
        const MarginalValueCurve q(p.energy_mwh, steps, m, -m);
        const auto out = backward_update(q, -50.0 + 550.0 * unit(rng), p);
        bool ok = out.is_monotone();
        for (std::size_t i = 1; i < out.steps().size(); ++i) ok = ok && out.steps()[i].value <= out.steps()[i - 1].value;
        violations += !ok;
    }
    return pass_if(violations == 0, std::to_string(violations) + " violations in 10000 updates");
}

// 4. K-S values and transform invariance.
Outcome ks_correctness() {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const auto same = ks_test(a, a);
    const auto apart = ks_test(a, b);
    const double expected = oracle::kolmogorov_tail(std::sqrt(1.5));
    bool ok = same.d_statistic == 0.0 && std::abs(same.p_value - 1.0) < 1e-3 &&
              std::abs(apart.d_statistic - 1.0) < 1e-3 && std::abs(apart.p_value - expected) < 1e-3 &&
              std::abs(apart.p_value - 0.0996) < 1e-3;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 60);
    int broken = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(std::size_t(size(rng))), y(std::size_t(size(rng)));
        for (auto& v : x) v = normal(rng);
        for (auto& v : y) v = normal(rng) * 1.5 + 0.3;
        auto f = [](std::vector<double> v) {
            for (auto& e : v) e = std::exp(2.0 * e) + e * e * e;
            return v;
        };
        broken += ks_statistic(x, y) != ks_statistic(f(x), f(y));
    }
    ok = ok && broken == 0;
    return pass_if(ok, "D(same)=" + fmt("%g", same.d_statistic) + " p=" + fmt("%g", same.p_value) +
                           "; D=" + fmt("%g", apart.d_statistic) + " p=" + fmt("%.6f", apart.p_value) +
                           "; transform mismatches " + std::to_string(broken) + "/1000");
}

// 5. Spike detection.
Outcome spike_detection() {
    std::vector<double> means(10, 50.0);
    means[4] = 1000.0;
    const auto cal = detect_spike_days(daily_means(means));
    bool ok = cal.flagged_dates.size() == 1 && cal.flagged_dates[0] == year_month_day{2023y / 7 / 5} &&
              std::abs(cal.threshold - 745.8) <= 0.1 &&
              std::abs(cal.threshold - (oracle::mean(means) + 2.0 * oracle::sample_std(means))) < 1e-9;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::lognormal_distribution<double> heavy(3.5, 0.9);
    int broken = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> base(10 + trial % 50), moved;
        for (auto& v : base) v = heavy(rng);
        const double scale = 0.05 + 20.0 * unit(rng), shift = -200.0 + 400.0 * unit(rng);
        for (double v : base) moved.push_back(scale * v + shift);
        broken += detect_spike_days(daily_means(base)).flagged_dates != detect_spike_days(daily_means(moved)).flagged_dates;
    }
    ok = ok && broken == 0;
    return pass_if(ok, "threshold " + fmt("%.3f", cal.threshold) + ", flagged " +
                           std::to_string(cal.flagged_dates.size()) + ", affine mismatches " + std::to_string(broken) +
                           "/1000");
}

// 6. FFT amplitude recovery and Parseval.
Outcome fft_recovery() {
    std::vector<double> x(14 * 24);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = 10.0 * std::sin(2.0 * std::numbers::pi * double(t) / 24.0);
    const auto report = fft_spectrum(x);
    double daily = 0.0;
    for (const auto& peak : dominant_bins(report, default_bands())) {
        if (peak.band.label == "24h") daily = peak.magnitude;
    }
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 25.0);
    double worst = 0.0;
    for (std::size_t n : {48u, 97u, 336u, 1000u}) {
        std::vector<double> y(n);
        for (std::size_t t = 0; t < n; ++t) y[t] = 80.0 + normal(rng) + 15.0 * std::sin(double(t) * 0.7);
        const double m = oracle::mean(y);
        double energy = 0.0;
        for (double v : y) energy += (v - m) * (v - m);
        worst = std::max(worst, std::abs(spectral_energy(fft_spectrum(y)) - energy) / energy);
    }
    return pass_if(std::abs(daily - 10.0) <= 0.2 && worst <= 0.01,
                   "24h band " + fmt("%.6f", daily) + ", Parseval worst rel error " + fmt("%.2e", worst));
}

std::vector<fs::path> env_paths(const char* name) {
    std::vector<fs::path> out;
    const char* v = std::getenv(name);
    if (!v) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.emplace_back(item);
    }
    return out;
}

// 7. Headline numbers on the 2023 CAISO archive.
Outcome headline_numbers() {
    PipelineConfig config;
    config.bid_paths = env_paths("STORAGE_BID_LAB_CAISO_BIDS");
    config.price_paths = env_paths("STORAGE_BID_LAB_CAISO_PRICES");
    if (config.bid_paths.empty() || config.price_paths.empty()) {
        return {Verdict::kSkip, "CAISO archive not supplied (STORAGE_BID_LAB_CAISO_BIDS / _PRICES unset)"};
    }
    const TimeZone tz(config.time_zone);
    const auto ds = load_dataset(config);
    const auto wbids = weighted_bids(ds.bids);
    auto select = [&](Market m, Direction d) {
        std::vector<WeightedBid> out;
        for (const auto& b : wbids) {
            if (b.market == m && b.direction == d) out.push_back(b);
        }
        return out;
    };
    const double discharge = cross_market_dominance(select(Market::kIfm, Direction::kDischarge),
                                                    select(Market::kRtpd, Direction::kDischarge), Direction::kDischarge)
                                 .fraction;
    const double charge = cross_market_dominance(select(Market::kIfm, Direction::kCharge),
                                                 select(Market::kRtpd, Direction::kCharge), Direction::kCharge)
                              .fraction;

    std::vector<PriceSample> rt;
    for (const auto& s : ds.prices) {
        if (s.market == Market::kRtPrice) rt.push_back(s);
    }
    const auto rt_mean = resample_hourly(aggregate_locations(rt, Aggregation::kMean));
    const auto calendar = detect_spike_days(daily_aggregate(rt_mean, tz), 2.0, Market::kRtPrice, Aggregation::kMean);
    const auto split = split_distribution(hourly_average(spread_series(wbids, Market::kRtpd)), calendar, tz);
    const double p = ks_test(split.spike, split.non_spike).p_value;

    auto band_sum = [&](Direction d) {
        std::vector<HourlyValue> values;
        for (const auto& b : hourly_average(select(Market::kRtpd, d))) values.push_back({b.interval_start, b.value});
        double sum = 0.0;
        for (const auto& peak : dominant_bins(fft_spectrum(values), default_bands())) sum += peak.magnitude;
        return sum;
    };
    const double sum_discharge = band_sum(Direction::kDischarge);
    const double sum_charge = band_sum(Direction::kCharge);

    const bool ok = std::abs(discharge - 0.79) <= 0.02 && std::abs(charge - 0.87) <= 0.02 &&
                    std::abs(double(calendar.flagged_dates.size()) - 11.0) <= 1.0 && p < 1e-30 &&
                    std::abs(sum_discharge - 60.0) <= 15.0 && std::abs(sum_charge - 30.0) <= 7.5;
    return pass_if(ok, "discharge dominance " + fmt("%.3f", discharge) + ", charge dominance " + fmt("%.3f", charge) +
                           ", spike days " + std::to_string(calendar.flagged_dates.size()) + ", K-S p " +
                           fmt("%.3g", p) + ", band sums " + fmt("%.1f", sum_discharge) + "/" +
                           fmt("%.1f", sum_charge));
}

// 8. Byte-identical bundles from two runs.
Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "storage_bid_lab_acceptance";
    fs::remove_all(root);
    PipelineConfig config;
    config.bid_paths = {fs::path(FIXTURE_DIR) / "bids_2day.csv"};
    config.price_paths = {fs::path(FIXTURE_DIR) / "prices_2day.csv"};
    config.output_dir = root / "a";
    const auto files = run_pipeline(config, Stage::kAll);
    config.output_dir = root / "b";
    const auto again = run_pipeline(config, Stage::kAll);
    int differing = files == again ? 0 : 1;
    for (const auto& f : files) differing += slurp(root / "a" / f) != slurp(root / "b" / f);
    return pass_if(differing == 0 && files.size() >= 8,
                   std::to_string(files.size()) + " files, " + std::to_string(differing) + " differ");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"1 oracle equivalence (200 instances, 2001-point lattice)", oracle_equivalence},
        {"2 worked two-step instance", worked_instance},
        {"3 monotonicity of backward_update", monotonicity},
        {"4 K-S correctness", ks_correctness},
        {"5 spike detection", spike_detection},
        {"6 FFT amplitude recovery and Parseval", fft_recovery},
        {"7 headline numbers on CAISO 2023 data", headline_numbers},
        {"8 determinism of the report bundle", determinism},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Verdict::kFail, std::string("threw: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kSkip ? "SKIP" : "FAIL";
        std::printf("[%s] %s: %s\n", tag, name, o.detail.c_str());
        failed += o.verdict == Verdict::kFail;
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
