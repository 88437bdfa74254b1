#include "storage_bid_lab/arbitrage_dp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "storage_bid_lab/error.hpp"

namespace storage_bid_lab {

namespace {

std::string str(double v) { return std::to_string(v); }

// q_{t-1}(e) from the three lookups of q_t around e. Cases are tested in the
// listed order, so at a threshold equality the earlier case wins.
//   after_charge    = q_t(e + P*eta)
//   here            = q_t(e)
//   after_discharge = q_t(e - P/eta)
double recursion_case(double price, double after_charge, double here, double after_discharge, double eta,
                      double cost) {
    if (price <= after_charge * eta) return after_charge;
    if (price <= here * eta) return price / eta;
    if (price <= std::max(here / eta + cost, 0.0)) return here;
    if (price <= std::max(after_discharge / eta + cost, 0.0)) return (price - cost) * eta;
    return after_discharge;
}

void check_monotone(const MarginalValueCurve& curve, const char* where) {
    if (!curve.is_monotone()) {
        throw Error(ErrorKind::kInvariantViolation, std::string(where) + ": marginal value curve is not non-increasing");
    }
}

}  // namespace

void StorageParams::validate() const {
    if (!(power_mw > 0.0) || !std::isfinite(power_mw)) {
        throw Error(ErrorKind::kInvalidConfig, "power must be > 0, got " + str(power_mw));
    }
    if (!(energy_mwh > 0.0) || !std::isfinite(energy_mwh)) {
        throw Error(ErrorKind::kInvalidConfig, "energy capacity must be > 0, got " + str(energy_mwh));
    }
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw Error(ErrorKind::kInvalidConfig, "efficiency must be in (0, 1], got " + str(efficiency));
    }
    if (!(discharge_cost >= 0.0) || !std::isfinite(discharge_cost)) {
        throw Error(ErrorKind::kInvalidConfig, "discharge cost must be >= 0, got " + str(discharge_cost));
    }
}

MarginalValueCurve::MarginalValueCurve(double capacity, std::vector<Step> steps, double sentinel_high,
                                       double sentinel_low)
    : capacity_(capacity), sentinel_high_(sentinel_high), sentinel_low_(sentinel_low) {
    if (!(capacity > 0.0)) throw Error(ErrorKind::kInvariantViolation, "curve capacity must be > 0");
    if (steps.empty() || steps.front().soc != 0.0) {
        throw Error(ErrorKind::kInvariantViolation, "curve must start at soc 0");
    }
    steps_.reserve(steps.size());
    for (const auto& s : steps) {
        if (!std::isfinite(s.value)) throw Error(ErrorKind::kInvariantViolation, "non-finite curve value");
        if (!steps_.empty() && !(s.soc > steps_.back().soc)) {
            throw Error(ErrorKind::kInvariantViolation, "curve breakpoints not strictly increasing");
        }
        if (s.soc > capacity) throw Error(ErrorKind::kInvariantViolation, "curve breakpoint beyond capacity");
        if (!steps_.empty() && steps_.back().value == s.value) continue;
        steps_.push_back(s);
    }
    for (const auto& s : steps_) {
        if (s.value > sentinel_high || s.value < sentinel_low) {
            throw Error(ErrorKind::kInvariantViolation, "curve value " + str(s.value) + " outside sentinels");
        }
    }
}

double MarginalValueCurve::operator()(double soc) const {
    if (soc < 0.0) return sentinel_high_;
    if (soc > capacity_) return sentinel_low_;
    auto it = std::upper_bound(steps_.begin(), steps_.end(), soc,
                               [](double e, const Step& s) { return e < s.soc; });
    return std::prev(it)->value;
}

bool MarginalValueCurve::is_monotone() const {
    for (std::size_t i = 1; i < steps_.size(); ++i) {
        if (steps_[i].value > steps_[i - 1].value) return false;
    }
    return true;
}

double sentinel_magnitude(const StorageParams& params, double price_bound, double terminal_value) {
    return 10.0 * (std::abs(price_bound) + std::abs(terminal_value) + params.discharge_cost + 1.0) /
           params.efficiency;
}

MarginalValueCurve make_terminal_curve(const StorageParams& params, double terminal_value, double price_bound) {
    params.validate();
    const double m = sentinel_magnitude(params, price_bound, terminal_value);
    return MarginalValueCurve(params.energy_mwh, {{0.0, terminal_value}}, m, -m);
}

MarginalValueCurve backward_update(const MarginalValueCurve& next, double price, const StorageParams& params) {
    check_monotone(next, "backward_update");
    const double eta = params.efficiency;
    const double cost = params.discharge_cost;
    const double cap = next.capacity();
    // A sentinel may only ever be compared against, never selected.
    if (!(price > next.sentinel_low() * eta) || !(price <= next.sentinel_high() / eta + cost) ||
        !((price - cost) * eta < next.sentinel_high()) || !(price / eta > next.sentinel_low())) {
        throw Error(ErrorKind::kInvariantViolation, "price " + str(price) + " outside the curve's sentinel range");
    }
    const double up = params.power_mw * eta;     // SoC gained by a full-power charge
    const double down = params.power_mw / eta;   // SoC lost by a full-power discharge
    const double tol = 1e-12 * std::max(1.0, cap);

    std::vector<double> cuts;
    cuts.reserve(3 * next.steps().size() + 3);
    cuts.push_back(cap - up);
    for (const auto& s : next.steps()) {
        cuts.push_back(s.soc - up);
        cuts.push_back(s.soc);
        cuts.push_back(s.soc + down);
    }
    std::vector<double> xs{0.0};
    std::sort(cuts.begin(), cuts.end());
    for (double x : cuts) {
        if (x <= tol || x >= cap - tol) continue;
        if (x - xs.back() > tol) xs.push_back(x);
    }
    xs.push_back(cap);

    // Each elementary interval is evaluated at an interior point so the
    // result stays right-continuous; e = E is evaluated on its own.
    std::vector<MarginalValueCurve::Step> steps;
    steps.reserve(xs.size());
    auto emit = [&](double soc, double value) {
        if (steps.empty() || steps.back().value != value) steps.push_back({soc, value});
    };
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        const double mid = 0.5 * (xs[k] + xs[k + 1]);
        emit(xs[k], recursion_case(price, next(mid + up), next(mid), next(mid - down), eta, cost));
    }
    emit(cap, recursion_case(price, next(cap + up), next(cap), next(cap - down), eta, cost));
    return MarginalValueCurve(cap, std::move(steps), next.sentinel_high(), next.sentinel_low());
}

std::vector<MarginalValueCurve> compute_value_series(std::span<const double> prices, const StorageParams& params,
                                                     double terminal_value) {
    params.validate();
    double bound = 0.0;
    for (double p : prices) bound = std::max(bound, std::abs(p));
    std::vector<MarginalValueCurve> series(prices.size() + 1);
    series.back() = make_terminal_curve(params, terminal_value, bound);
    for (std::size_t t = prices.size(); t-- > 0;) {
        series[t] = backward_update(series[t + 1], prices[t], params);
    }
    return series;
}

std::vector<MarginalValueCurve> compute_value_series(const PriceSeries& prices, const StorageParams& params,
                                                     double terminal_value) {
    std::vector<double> values;
    values.reserve(prices.size());
    for (const auto& p : prices.samples()) values.push_back(p.price);
    return compute_value_series(values, params, terminal_value);
}

BidPoint bid_at(const MarginalValueCurve& curve, const StorageParams& params, double soc) {
    const double q = curve(soc);
    return {soc, q / params.efficiency + params.discharge_cost, params.efficiency * q};
}

std::vector<BidPoint> bid_curve(const MarginalValueCurve& curve, const StorageParams& params) {
    check_monotone(curve, "bid_curve");
    std::vector<BidPoint> out;
    out.reserve(curve.steps().size());
    for (const auto& s : curve.steps()) out.push_back(bid_at(curve, params, s.soc));
    return out;
}

double DispatchSchedule::total_profit() const {
    double sum = 0.0;
    for (const auto& s : steps) sum += s.profit;
    return sum;
}

DispatchSchedule forward_dispatch(std::span<const double> prices, std::span<const MarginalValueCurve> value_series,
                                  const StorageParams& params, double initial_soc) {
    params.validate();
    if (value_series.size() != prices.size() + 1) {
        throw Error(ErrorKind::kAlignmentError, "forward_dispatch: " + std::to_string(value_series.size()) +
                                                    " curves for " + std::to_string(prices.size()) + " prices");
    }
    const double cap = params.energy_mwh;
    if (!(initial_soc >= 0.0 && initial_soc <= cap)) {
        throw Error(ErrorKind::kInvariantViolation, "initial SoC " + str(initial_soc) + " outside [0, E]");
    }
    const double eta = params.efficiency;
    const double cost = params.discharge_cost;
    const double pmax = params.power_mw;

    DispatchSchedule schedule;
    schedule.initial_soc = initial_soc;
    schedule.steps.reserve(prices.size());
    double soc = initial_soc;
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const double price = prices[t];
        const auto& q = value_series[t + 1];
        const auto& steps = q.steps();
        DispatchStep step;
        step.price = price;

        if (price < eta * q(soc)) {
            // Charge up to the first SoC whose stored value no longer beats the price.
            auto it = std::upper_bound(steps.begin(), steps.end(), soc,
                                       [](double e, const MarginalValueCurve::Step& s) { return e < s.soc; });
            double target = cap;
            for (; it != steps.end(); ++it) {
                if (eta * it->value <= price) {
                    target = it->soc;
                    break;
                }
            }
            const double next_soc = std::min({target, soc + pmax * eta, cap});
            step.charge_mw = std::min(pmax, (next_soc - soc) / eta);
            soc = std::min(cap, soc + step.charge_mw * eta);
        } else if (price >= 0.0) {
            // Discharge down through every step whose energy is worth less
            // than the price net of discharge cost.
            double target = soc;
            auto it = std::lower_bound(steps.begin(), steps.end(), soc,
                                       [](const MarginalValueCurve::Step& s, double e) { return s.soc < e; });
            while (it != steps.begin()) {
                --it;
                if (!(price > std::max(it->value / eta + cost, 0.0))) break;
                target = it->soc;
            }
            const double next_soc = std::max({target, soc - pmax / eta, 0.0});
            step.discharge_mw = std::min(pmax, (soc - next_soc) * eta);
            soc = std::max(0.0, soc - step.discharge_mw / eta);
        }
        step.soc_mwh = soc;
        step.profit = price * (step.discharge_mw - step.charge_mw) - cost * step.discharge_mw;
        schedule.steps.push_back(step);
    }
    return schedule;
}

HindsightRun run_hindsight(const PriceSeries& prices, const StorageParams& params, const HindsightOptions& options) {
    params.validate();
    HindsightRun run;
    const double e0 = options.initial_soc.value_or(0.5 * params.energy_mwh);
    run.dispatch.initial_soc = e0;
    if (prices.empty()) return run;

    std::vector<double> values;
    values.reserve(prices.size());
    for (const auto& p : prices.samples()) values.push_back(p.price);
    const std::size_t window = options.window_steps == 0 ? values.size() : options.window_steps;

    double soc = e0;
    for (std::size_t begin = 0; begin < values.size(); begin += window) {
        const std::size_t end = std::min(values.size(), begin + window);
        const std::span<const double> chunk(values.data() + begin, end - begin);
        auto curves = compute_value_series(chunk, params, options.terminal_value);
        const auto dispatch = forward_dispatch(chunk, curves, params, soc);
        for (std::size_t t = 0; t < chunk.size(); ++t) {
            const double start_soc = t == 0 ? soc : dispatch.steps[t - 1].soc_mwh;
            const auto bid = bid_at(curves[t], params, start_soc);
            run.bids.push_back({prices.samples()[begin + t].timestamp, start_soc, bid.charge_bid, bid.discharge_bid});
            run.curves.push_back(std::move(curves[t]));
        }
        run.dispatch.steps.insert(run.dispatch.steps.end(), dispatch.steps.begin(), dispatch.steps.end());
        soc = dispatch.final_soc();
    }
    return run;
}

std::vector<HindsightBid> hindsight_bid_series(const PriceSeries& prices, const StorageParams& params,
                                               const HindsightOptions& options) {
    return run_hindsight(prices, params, options).bids;
}

GridOracleResult grid_oracle(std::span<const double> prices, const StorageParams& params, double initial_soc,
                             std::size_t soc_steps, double terminal_value) {
    params.validate();
    if (soc_steps < 2) throw Error(ErrorKind::kInvalidConfig, "grid_oracle needs at least 2 SoC points");
    const std::size_t n = soc_steps;
    const std::size_t horizon = prices.size();
    const double eta = params.efficiency;
    const double cost = params.discharge_cost;
    const double h = params.energy_mwh / double(n - 1);
    const auto max_up = std::ptrdiff_t(std::floor(params.power_mw * eta / h + 1e-9));
    const auto max_down = std::ptrdiff_t(std::floor(params.power_mw / (eta * h) + 1e-9));
    const auto start = std::size_t(std::clamp(std::llround(initial_soc / h), 0LL, (long long)(n - 1)));

    std::vector<double> value(n);
    for (std::size_t i = 0; i < n; ++i) value[i] = terminal_value * double(i) * h;
    std::vector<std::vector<std::int32_t>> choice(horizon, std::vector<std::int32_t>(n));
    std::vector<double> prev(n);
    std::deque<std::size_t> window;

    for (std::size_t t = horizon; t-- > 0;) {
        const double price = prices[t];
        // Moving from i to j > i costs price * (j - i) h / eta.
        const double charge_slope = price * h / eta;
        // Moving from i to j < i earns (price - c) * (i - j) h * eta.
        const double discharge_slope = (price - cost) * h * eta;
        auto& pick = choice[t];
        for (std::size_t i = 0; i < n; ++i) {
            prev[i] = value[i];
            pick[i] = std::int32_t(i);
        }

        auto charge_key = [&](std::size_t j) { return value[j] - charge_slope * double(j); };
        window.clear();
        for (std::size_t i = n; i-- > 0;) {
            if (i + 1 < n) {
                const std::size_t j = i + 1;
                while (!window.empty() && charge_key(window.back()) <= charge_key(j)) window.pop_back();
                window.push_back(j);
            }
            while (!window.empty() && std::ptrdiff_t(window.front()) > std::ptrdiff_t(i) + max_up) window.pop_front();
            if (!window.empty()) {
                const std::size_t j = window.front();
                const double v = charge_key(j) + charge_slope * double(i);
                if (v > prev[i]) {
                    prev[i] = v;
                    pick[i] = std::int32_t(j);
                }
            }
        }

        if (price >= 0.0) {
            auto discharge_key = [&](std::size_t j) { return value[j] - discharge_slope * double(j); };
            window.clear();
            for (std::size_t i = 0; i < n; ++i) {
                if (i > 0) {
                    const std::size_t j = i - 1;
                    while (!window.empty() && discharge_key(window.back()) <= discharge_key(j)) window.pop_back();
                    window.push_back(j);
                }
                while (!window.empty() && std::ptrdiff_t(window.front()) < std::ptrdiff_t(i) - max_down) {
                    window.pop_front();
                }
                if (!window.empty()) {
                    const std::size_t j = window.front();
                    const double v = discharge_key(j) + discharge_slope * double(i);
                    if (v > prev[i]) {
                        prev[i] = v;
                        pick[i] = std::int32_t(j);
                    }
                }
            }
        }
        value.swap(prev);
    }

    GridOracleResult result;
    result.initial_values = value;
    result.objective = value[start];
    result.initial_soc = std::min(params.energy_mwh, double(start) * h);
    result.schedule.initial_soc = result.initial_soc;
    std::size_t i = start;
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto j = std::size_t(choice[t][i]);
        DispatchStep step;
        step.price = prices[t];
        if (j > i) step.charge_mw = double(j - i) * h / eta;
        if (j < i) step.discharge_mw = double(i - j) * h * eta;
        step.soc_mwh = std::min(params.energy_mwh, double(j) * h);
        step.profit = step.price * (step.discharge_mw - step.charge_mw) - cost * step.discharge_mw;
        result.schedule.steps.push_back(step);
        i = j;
    }
    result.profit = result.schedule.total_profit();
    return result;
}

double grid_bound(std::span<const double> prices, const StorageParams& params, std::size_t soc_steps,
                  double continuous_objective, double initial_soc, double terminal_value) {
    // Shrinking the optimal trajectory toward "hold" by theta leaves room to
    // floor every SoC onto the lattice without breaking the power limits;
    // concavity bounds the shrink loss and Lipschitz continuity the rounding.
    const double eta = params.efficiency;
    const double h = params.energy_mwh / double(soc_steps - 1);
    const double theta = h / (params.power_mw * eta);
    double lipschitz = 0.0;
    for (double p : prices) {
        lipschitz += std::max(std::abs(p) / eta, std::abs(p - params.discharge_cost) * eta);
    }
    return theta * std::max(0.0, continuous_objective - terminal_value * initial_soc) +
           h * (lipschitz + std::abs(terminal_value));
}

}  // namespace storage_bid_lab
