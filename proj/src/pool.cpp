#include "rmm/pool.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "json_util.hpp"
#include "rmm/error.hpp"
#include "rmm/numerics.hpp"

namespace rmm::pool {

using numerics::std_normal_cdf;
using numerics::std_normal_inv_cdf;

namespace {

// Prices within this relative distance of a band edge count as inside.
constexpr double kBandSlack = 1e-12;

double vol_at(const PoolParams& p, double t) {
    const double tau = p.tau_at(t);
    if (tau < 0.0) {
        throw ExpiryError("time is past the pool expiry");
    }
    return p.sigma * std::sqrt(tau);
}

void require_unexpired(const PoolState& s, const PoolParams& p, const char* op) {
    if (is_expired(s, p)) {
        throw ExpiryError(std::string(op) + ": pool has expired");
    }
}

void require_positive(double x, const char* what) {
    if (!std::isfinite(x) || !(x > 0.0)) {
        throw DomainError(std::string(what) + " must be positive and finite");
    }
}

PoolState with_reserves(const PoolState& s, const PoolParams& p, double risky, double stable) {
    PoolState out = s;
    out.risky = risky;
    out.stable = stable;
    out.invariant = invariant(out, p);
    return out;
}

}  // namespace

void PoolParams::validate() const {
    require_positive(strike, "strike");
    require_positive(sigma, "sigma");
    if (!std::isfinite(expiry)) {
        throw DomainError("expiry must be finite");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw DomainError("gamma must lie in (0, 1]");
    }
}

double clamp_risky(double risky) { return std::clamp(risky, kMinRisky, kMaxRisky); }

double risky_from_price(double price, const PoolParams& params, double t) {
    params.validate();
    require_positive(price, "price");
    if (t >= params.expiry) {
        throw ExpiryError("risky_from_price: no time to expiry");
    }
    const double vol = vol_at(params, t);
    return std_normal_cdf(-std::log(price / params.strike) / vol - 0.5 * vol);
}

double stable_from_risky(double risky, double k, const PoolParams& params, double t) {
    if (!(risky > 0.0 && risky < 1.0)) {
        throw DomainError("stable_from_risky: risky reserve must lie in (0,1)");
    }
    const double vol = vol_at(params, t);
    // Phi^-1(1 - Rx) == -Phi^-1(Rx), and the right side keeps precision for small Rx.
    return params.strike * std_normal_cdf(-std_normal_inv_cdf(risky) - vol) + k;
}

double invariant(const PoolState& state, const PoolParams& params) {
    return state.stable - stable_from_risky(state.risky, 0.0, params, state.time);
}

double report_price(const PoolState& state, const PoolParams& params) {
    require_unexpired(state, params, "report_price");
    const double vol = vol_at(params, state.time);
    return params.strike * std::exp(-std_normal_inv_cdf(state.risky) * vol - 0.5 * vol * vol);
}

PoolState initialize(const PoolParams& params, double t, double price, double liquidity) {
    require_positive(liquidity, "liquidity");
    const double risky = risky_from_price(price, params, t);
    if (risky < kMinRisky || risky > kMaxRisky) {
        throw LiquidityBoundError("initialize: price maps outside the reserve band");
    }
    PoolState s{risky, stable_from_risky(risky, 0.0, params, t), 0.0, t, liquidity};
    s.invariant = invariant(s, params);
    return s;
}

PoolState from_reserves(const PoolParams& params, double t, double risky, double stable,
                        double liquidity) {
    params.validate();
    require_positive(liquidity, "liquidity");
    if (risky < kMinRisky || risky > kMaxRisky) {
        throw LiquidityBoundError("from_reserves: risky reserve outside the band");
    }
    if (!std::isfinite(stable) || stable < 0.0) {
        throw DomainError("from_reserves: stable reserve must be non-negative");
    }
    if (t > params.expiry) {
        throw ExpiryError("from_reserves: time is past expiry");
    }
    PoolState s{risky, stable, 0.0, t, liquidity};
    s.invariant = invariant(s, params);
    return s;
}

SwapResult swap(const PoolState& state, const PoolParams& params, Direction direction,
                double amount_in) {
    params.validate();
    require_positive(amount_in, "swap amount_in");
    require_unexpired(state, params, "swap");

    const double per_unit = amount_in / state.liquidity;
    const double credited = params.gamma * per_unit;
    const double k = state.invariant;

    PoolState next;
    double amount_out = 0.0;
    if (direction == Direction::RiskyIn) {
        const double risky = state.risky + per_unit;
        if (risky > kMaxRisky) {
            throw LiquidityBoundError("swap: risky reserve would exceed the band");
        }
        const double stable = stable_from_risky(state.risky + credited, k, params, state.time);
        if (stable < 0.0) {
            throw LiquidityBoundError("swap: stable reserve would go negative");
        }
        amount_out = (state.stable - stable) * state.liquidity;
        next = with_reserves(state, params, risky, stable);
    } else {
        const double level = (state.stable + credited - k) / params.strike;
        if (!(level > 0.0 && level < 1.0)) {
            throw LiquidityBoundError("swap: stable input exhausts the risky reserve");
        }
        const double vol = vol_at(params, state.time);
        const double risky = std_normal_cdf(-std_normal_inv_cdf(level) - vol);
        if (risky < kMinRisky) {
            throw LiquidityBoundError("swap: risky reserve would fall below the band");
        }
        amount_out = (state.risky - risky) * state.liquidity;
        next = with_reserves(state, params, risky, state.stable + per_unit);
    }

    SwapReceipt receipt{direction,
                        amount_in,
                        (1.0 - params.gamma) * amount_in,
                        amount_out,
                        k,
                        next.invariant,
                        report_price(next, params)};
    return {next, receipt};
}

PoolState advance_time(const PoolState& state, const PoolParams& params, double dt) {
    if (!std::isfinite(dt) || !(dt > 0.0)) {
        throw DomainError("advance_time: dt must be positive");
    }
    require_unexpired(state, params, "advance_time");
    PoolState next = state;
    next.time = state.time + dt >= params.expiry ? params.expiry : state.time + dt;
    next.invariant = invariant(next, params);
    return next;
}

namespace {

// Largest swap not exceeding `amount` that the curve can settle. A target
// price can be out of reach, e.g. a negative k near expiry leaves no stable
// to pay out; the arbitrageur then stops where the curve ends.
AlignResult feasible_swap(const PoolState& state, const PoolParams& params, Direction direction,
                          double amount) {
    try {
        auto [next, receipt] = swap(state, params, direction, amount);
        return {next, receipt};
    } catch (const LiquidityBoundError&) {
    }
    double lo = 0.0;
    double hi = amount;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        try {
            (void)swap(state, params, direction, mid);
            lo = mid;
        } catch (const LiquidityBoundError&) {
            hi = mid;
        }
    }
    spdlog::debug("arbitrage_align: partial fill {} of {}", lo, amount);
    if (!(lo > 0.0)) {
        return {state, std::nullopt};
    }
    auto [next, receipt] = swap(state, params, direction, lo);
    return {next, receipt};
}

}  // namespace

AlignResult arbitrage_align(const PoolState& state, const PoolParams& params,
                            double market_price) {
    params.validate();
    require_positive(market_price, "market price");
    require_unexpired(state, params, "arbitrage_align");

    const double price = report_price(state, params);
    const double upper = market_price / params.gamma;
    const double lower = market_price * params.gamma;

    if (price > upper * (1.0 + kBandSlack)) {
        // Pool overprices risky: arbitrageurs sell risky in until the pool
        // reports the upper edge.
        const double target = clamp_risky(risky_from_price(upper, params, state.time));
        const double amount = (target - state.risky) * state.liquidity;
        if (!(amount > 0.0)) {
            return {state, std::nullopt};
        }
        return feasible_swap(state, params, Direction::RiskyIn, amount);
    }
    if (price < lower * (1.0 - kBandSlack)) {
        const double target = clamp_risky(risky_from_price(lower, params, state.time));
        const double needed = stable_from_risky(target, state.invariant, params, state.time);
        const double amount = (needed - state.stable) / params.gamma * state.liquidity;
        if (!(amount > 0.0)) {
            return {state, std::nullopt};
        }
        return feasible_swap(state, params, Direction::StableIn, amount);
    }
    return {state, std::nullopt};
}

double lpt_value(const PoolState& state, const PoolParams& params, double price) {
    require_unexpired(state, params, "lpt_value (use settle at expiry)");
    return bs::covered_call_value(price, params.option_at(state.time)) + state.invariant;
}

Settlement settle(const PoolState& state, const PoolParams& params, double terminal_price) {
    require_positive(terminal_price, "terminal price");
    if (!is_expired(state, params)) {
        throw ExpiryError("settle: pool has not expired");
    }
    const double k = invariant(state, params);
    Settlement out{};
    if (terminal_price >= params.strike) {
        const double stable = params.strike + k;
        out = {0.0, std::max(stable, 0.0), std::min(stable, 0.0)};
    } else {
        out = {1.0, std::max(k, 0.0), std::min(k, 0.0)};
    }
    if (out.terminal_error < 0.0) {
        spdlog::debug("settle: terminal error {} per unit liquidity (k = {})", out.terminal_error,
                      k);
    }
    return out;
}

std::string to_json(const PoolParams& params, const PoolState& state) {
    using detail::decimal;
    detail::json j;
    j["K"] = decimal(params.strike);
    j["sigma"] = decimal(params.sigma);
    j["T"] = decimal(params.expiry);
    j["gamma"] = decimal(params.gamma);
    j["Rx"] = decimal(state.risky);
    j["Ry"] = decimal(state.stable);
    j["k"] = decimal(state.invariant);
    j["t"] = decimal(state.time);
    j["L"] = decimal(state.liquidity);
    return j.dump();
}

Snapshot snapshot_from_json(const std::string& text) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw ValidationError(std::string("pool snapshot: ") + e.what());
    }
    using detail::real_field;
    Snapshot s{{real_field(j, "K"), real_field(j, "sigma"), real_field(j, "T"),
                real_field(j, "gamma")},
               {real_field(j, "Rx"), real_field(j, "Ry"), real_field(j, "k"), real_field(j, "t"),
                real_field(j, "L")}};
    s.params.validate();
    return s;
}

}  // namespace rmm::pool
