// storage-bid-lab: batch driver for the bid analysis pipeline.
//
//   storage-bid-lab all --bids bids.csv --prices prices.csv --out report/
//   storage-bid-lab case-study --date 2023-08-16 --config scenario.ini
//
// Errors go to stdout as one JSON object; exit 2 for invalid configuration,
// 1 for any other failure.

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "storage_bid_lab/error.hpp"
#include "storage_bid_lab/pipeline.hpp"

namespace sbl = storage_bid_lab;

namespace {

int fail(std::string_view kind, std::string_view message, int code) {
    nlohmann::json j = {{"error", kind}, {"message", message}};
    std::cout << j.dump() << "\n";
    return code;
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("storage-bid-lab");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("STORAGE_BID_LAB_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();

    CLI::App app{"Storage bid analytics: weighted bids, hindsight-optimal bids, withholding diagnostics"};
    app.set_config("--config", "", "Key = value scenario file; flags override it");
    app.require_subcommand(1);

    sbl::PipelineConfig config;
    std::vector<std::string> bids, prices;
    std::string out = config.output_dir.string();
    std::optional<double> soc0;
    std::string gap_policy = "longest";

    app.add_option("--bids", bids, "Bid report CSV (repeatable)");
    app.add_option("--prices", prices, "Price CSV (repeatable)");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--tz", config.time_zone, "Reporting time zone")->capture_default_str();
    app.add_option("--power", config.storage.power_mw, "Power rating P, MW")->capture_default_str();
    app.add_option("--energy", config.storage.energy_mwh, "Energy capacity E, MWh")->capture_default_str();
    app.add_option("--efficiency", config.storage.efficiency, "One-way efficiency eta")->capture_default_str();
    app.add_option("--cost", config.storage.discharge_cost, "Discharge cost c, $/MWh")->capture_default_str();
    app.add_option("--soc0", soc0, "Initial SoC, MWh (default E/2)");
    app.add_option("--terminal-value", config.terminal_value, "Value of energy left at the end, $/MWh")
        ->capture_default_str();
    app.add_option("--window-hours", config.window_hours, "Split the DP into windows of this length (0 = none)")
        ->capture_default_str();
    app.add_option("--spike-k", config.spike_k, "Spike threshold multiplier k")->capture_default_str();
    app.add_option("--gap-policy", gap_policy, "Spectrum gap handling")
        ->check(CLI::IsMember({"longest", "fill", "reject"}))
        ->capture_default_str();
    app.add_flag("--export-curves", config.export_value_function, "Also write value_function.csv");

    const std::map<std::string, sbl::Stage> stages = {{"ingest", sbl::Stage::kIngest},
                                                      {"metrics", sbl::Stage::kMetrics},
                                                      {"hindsight", sbl::Stage::kHindsight},
                                                      {"stats", sbl::Stage::kStats},
                                                      {"all", sbl::Stage::kAll}};
    std::map<CLI::App*, sbl::Stage> stage_of;
    for (const auto& [name, stage] : stages) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
        sub->fallthrough();
        stage_of[sub] = stage;
    }
    std::string date_text;
    auto* case_study = app.add_subcommand("case-study", "Single-day aligned prices, bids and hindsight bids");
    case_study->add_option("--date", date_text, "Local date, YYYY-MM-DD")->required();
    case_study->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("InvalidConfig", e.what(), 2);
    }

    for (const auto& p : bids) config.bid_paths.emplace_back(p);
    for (const auto& p : prices) config.price_paths.emplace_back(p);
    config.output_dir = out;
    config.initial_soc = soc0;
    config.gap_policy = gap_policy == "fill"     ? sbl::GapPolicy::kLinearFill
                        : gap_policy == "reject" ? sbl::GapPolicy::kReject
                                                 : sbl::GapPolicy::kLongestSegment;

    try {
        if (case_study->parsed()) {
            sbl::Date date;
            if (!sbl::parse_date(date_text, date)) {
                throw sbl::Error(sbl::ErrorKind::kInvalidConfig, "bad --date '" + date_text + "'");
            }
            const auto summary = sbl::run_case_study(config, date);
            std::cout << sbl::to_json(summary).dump(2) << "\n";
            return 0;
        }
        for (const auto& [sub, stage] : stage_of) {
            if (!sub->parsed()) continue;
            for (const auto& file : sbl::run_pipeline(config, stage)) {
                std::cout << (config.output_dir / file).generic_string() << "\n";
            }
        }
        return 0;
    } catch (const sbl::Error& e) {
        return fail(sbl::to_string(e.kind()), e.what(), e.kind() == sbl::ErrorKind::kInvalidConfig ? 2 : 1);
    } catch (const std::exception& e) {
        return fail("Internal", e.what(), 1);
    }
}
