#pragma once

// Hindsight storage arbitrage: exact backward recursion for the marginal
// value of stored energy q_t(e), the bid curves it implies, and the forward
// dispatch that realizes the optimal schedule.
//
// q_t is kept as an exact piecewise-constant, right-continuous,
// non-increasing step function on [0, E]. Each backward step maps a step
// function to a step function, so no SoC grid is involved and the cost is
// linear in the number of breakpoints.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "storage_bid_lab/market_data.hpp"

namespace storage_bid_lab {

struct StorageParams {
    double power_mw = 1.0;        // P, charge and discharge limit
    double energy_mwh = 4.0;      // E
    double efficiency = 0.92;     // one-way, applied on both charge and discharge
    double discharge_cost = 0.0;  // c, $/MWh discharged

    // Throws Error(kInvalidConfig) unless P > 0, E > 0, 0 < eta <= 1, c >= 0.
    void validate() const;
};

class MarginalValueCurve {
public:
    struct Step {
        double soc = 0.0;    // MWh, start of the step
        double value = 0.0;  // $/MWh on [soc, next soc)
        bool operator==(const Step&) const = default;
    };

    MarginalValueCurve() = default;
    // Steps must start at soc 0, be strictly increasing and lie in [0, E];
    // adjacent equal values are merged. sentinel_high must dominate and
    // sentinel_low be dominated by every step value.
    MarginalValueCurve(double capacity, std::vector<Step> steps, double sentinel_high, double sentinel_low);

    double capacity() const noexcept { return capacity_; }
    const std::vector<Step>& steps() const noexcept { return steps_; }
    double sentinel_high() const noexcept { return sentinel_high_; }
    double sentinel_low() const noexcept { return sentinel_low_; }

    // sentinel_high below 0, sentinel_low above E, right-continuous lookup
    // in between. The last step covers E inclusively.
    double operator()(double soc) const;

    bool is_monotone() const;

    bool operator==(const MarginalValueCurve&) const = default;

private:
    double capacity_ = 0.0;
    std::vector<Step> steps_;
    double sentinel_high_ = 0.0;
    double sentinel_low_ = 0.0;
};

// Sentinel magnitude large enough that no price of magnitude <= price_bound
// can select a sentinel inside the recursion.
double sentinel_magnitude(const StorageParams& params, double price_bound, double terminal_value);

MarginalValueCurve make_terminal_curve(const StorageParams& params, double terminal_value = 0.0,
                                       double price_bound = 2000.0);

inline double evaluate_curve(const MarginalValueCurve& curve, double soc) { return curve(soc); }

// One step of the closed-form recursion: q_t and price lambda_t give
// q_{t-1}. Throws InvariantViolation if q_t is not non-increasing or the
// price is outside the range its sentinels were sized for.
MarginalValueCurve backward_update(const MarginalValueCurve& next, double price, const StorageParams& params);

// Result has prices.size() + 1 curves; element t is q_t and the last one is
// the terminal curve. Price index i is applied between curves i and i + 1.
std::vector<MarginalValueCurve> compute_value_series(std::span<const double> prices, const StorageParams& params,
                                                     double terminal_value = 0.0);
std::vector<MarginalValueCurve> compute_value_series(const PriceSeries& prices, const StorageParams& params,
                                                     double terminal_value = 0.0);

struct BidPoint {
    double soc = 0.0;            // start of the SoC step the bid applies to
    double discharge_bid = 0.0;  // q/eta + c
    double charge_bid = 0.0;     // eta * q
};

BidPoint bid_at(const MarginalValueCurve& curve, const StorageParams& params, double soc);
// One point per step of the curve.
std::vector<BidPoint> bid_curve(const MarginalValueCurve& curve, const StorageParams& params);

struct DispatchStep {
    double charge_mw = 0.0;
    double discharge_mw = 0.0;
    double soc_mwh = 0.0;  // at the end of the step
    double price = 0.0;
    double profit = 0.0;   // price * (discharge - charge) - c * discharge
};

struct DispatchSchedule {
    double initial_soc = 0.0;
    std::vector<DispatchStep> steps;

    double total_profit() const;
    double final_soc() const { return steps.empty() ? initial_soc : steps.back().soc_mwh; }
};

// Greedy marginal dispatch against q: charge while eta*q(e) exceeds the
// price, discharge while the price exceeds [q(e-)/eta + c]^+, within the
// power and SoC limits. Never discharges at a negative price. Throws
// AlignmentError unless value_series.size() == prices.size() + 1.
DispatchSchedule forward_dispatch(std::span<const double> prices, std::span<const MarginalValueCurve> value_series,
                                  const StorageParams& params, double initial_soc);

struct HindsightOptions {
    double terminal_value = 0.0;
    std::optional<double> initial_soc;  // defaults to E / 2
    // 0 runs one DP over the whole series; otherwise independent DPs over
    // consecutive windows of this many steps, chained by the realized SoC.
    std::size_t window_steps = 0;
};

struct HindsightBid {
    Timestamp timestamp;
    double soc = 0.0;  // SoC at the start of the step
    double charge_bid = 0.0;
    double discharge_bid = 0.0;
};

struct HindsightRun {
    std::vector<HindsightBid> bids;
    DispatchSchedule dispatch;
    // curves[t] is the curve the bid at step t was read from.
    std::vector<MarginalValueCurve> curves;
};

HindsightRun run_hindsight(const PriceSeries& prices, const StorageParams& params,
                           const HindsightOptions& options = {});

// Bid curve evaluated at the realized optimal SoC for every step.
std::vector<HindsightBid> hindsight_bid_series(const PriceSeries& prices, const StorageParams& params,
                                               const HindsightOptions& options = {});

// Tabular DP on a uniform SoC lattice, independent of the curve recursion.
// Used to verify it.
struct GridOracleResult {
    double profit = 0.0;     // operating profit of the lattice-optimal schedule
    double objective = 0.0;  // profit + terminal_value * final SoC
    double initial_soc = 0.0;  // e_0 snapped to the lattice
    DispatchSchedule schedule;
    std::vector<double> initial_values;  // optimal objective from every lattice SoC
};

GridOracleResult grid_oracle(std::span<const double> prices, const StorageParams& params, double initial_soc,
                             std::size_t soc_steps, double terminal_value = 0.0);

// Upper bound on (continuous optimum - lattice optimum) for the lattice
// grid_oracle uses, given the continuous objective.
double grid_bound(std::span<const double> prices, const StorageParams& params, std::size_t soc_steps,
                  double continuous_objective, double initial_soc, double terminal_value = 0.0);

}  // namespace storage_bid_lab
