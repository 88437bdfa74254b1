#pragma once

// Batch driver: ingest -> bid metrics -> hindsight DP -> statistics ->
// report bundle, plus the single-day case study. Output is a pure function
// of inputs and configuration.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storage_bid_lab/arbitrage_dp.hpp"
#include "storage_bid_lab/market_data.hpp"
#include "storage_bid_lab/stats.hpp"

namespace storage_bid_lab {

struct PipelineConfig {
    std::vector<std::filesystem::path> bid_paths;
    std::vector<std::filesystem::path> price_paths;
    std::filesystem::path output_dir = "out";
    std::string time_zone = "America/Los_Angeles";
    StorageParams storage;
    std::optional<double> initial_soc;  // MWh, defaults to E / 2
    double terminal_value = 0.0;
    std::size_t window_hours = 0;  // 0 = one continuous DP
    double spike_k = 2.0;
    std::vector<PeriodBand> bands = default_bands();
    GapPolicy gap_policy = GapPolicy::kLongestSegment;
    bool export_value_function = false;

    // Throws Error(kInvalidConfig) for missing inputs or bad parameters.
    void validate() const;
};

enum class Stage { kIngest, kMetrics, kHindsight, kStats, kAll };

struct Dataset {
    std::vector<BidSnapshot> bids;
    std::vector<PriceSample> prices;
    std::vector<std::string> warnings;
};

Dataset load_dataset(const PipelineConfig& config);

// Writes the stage's report files into config.output_dir and returns their
// names in write order.
std::vector<std::string> run_pipeline(const PipelineConfig& config, Stage stage);

struct CaseStudySummary {
    Date date;
    std::vector<int> spike_hours;  // local hours
    std::optional<double> pre_spike_discharge_bid;
    std::optional<double> min_spike_discharge_bid;
    std::optional<double> discharge_bid_change;  // pre-spike minus spike minimum
    std::optional<double> max_spike_cleared_discharge_mw;
    bool withholding_gap = false;
    double max_withholding_gap = 0.0;  // $/MW, historical minus hindsight discharge bid
    std::vector<int> withholding_gap_hours;
};

// Writes case_study_<date>.csv and case_study_<date>.json. Throws
// DateOutOfRange when the date has no data.
CaseStudySummary run_case_study(const PipelineConfig& config, const Date& date);

nlohmann::json to_json(const CaseStudySummary& summary);

}  // namespace storage_bid_lab
