#include "rmm/vault.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "json_util.hpp"
#include "rmm/error.hpp"
#include "rmm/numerics.hpp"

namespace rmm::vault {

using numerics::std_normal_cdf;
using numerics::std_normal_inv_cdf;

namespace {

void require_positive(double x, const char* what) {
    if (!std::isfinite(x) || !(x > 0.0)) {
        throw DomainError(std::string(what) + " must be positive and finite");
    }
}

double pool_mark(const LiveLp& lp, double price) {
    return lp.state.liquidity * (lp.state.risky * price + lp.state.stable);
}

double risky_exposure(const VaultState& v) {
    return v.holdings.risky + (v.lp ? v.lp->state.total_risky() : 0.0);
}

// Revalues everything held from last_price to `price`.
void mark_to(VaultState& v, double price) {
    require_positive(price, "market price");
    if (v.last_price > 0.0) {
        v.market_pnl += risky_exposure(v) * (price - v.last_price);
    }
    v.last_price = price;
}

bool same_pool(const pool::PoolParams& a, const pool::PoolParams& b) {
    return a.strike == b.strike && a.sigma == b.sigma && a.expiry == b.expiry;
}

void validate_path(const PricePath& path) {
    if (path.times.size() != path.prices.size()) {
        throw ValidationError("price path: times and prices differ in length");
    }
    if (path.times.size() < 2) {
        throw ValidationError("price path needs at least two points");
    }
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        if (!std::isfinite(path.times[i]) || !(path.prices[i] > 0.0) ||
            !std::isfinite(path.prices[i])) {
            throw ValidationError("price path: non-finite time or non-positive price");
        }
        if (i > 0 && !(path.times[i] > path.times[i - 1])) {
            throw ValidationError("price path: times must be strictly increasing");
        }
    }
}

// Prepares a vault for the next pool: revalues at the market price and
// pulls reserves out of a live pool.
VaultState prepare_rollover(const VaultState& vault, const pool::PoolParams& next, double t,
                            double market_price) {
    next.validate();
    if (!std::isfinite(t) || t >= next.expiry) {
        throw ExpiryError("rollover: next pool is already expired");
    }
    VaultState v = vault;
    if (v.lp && pool::is_expired(v.lp->state, v.lp->params)) {
        throw ExpiryError("rollover: settle the expired pool first");
    }
    mark_to(v, market_price);
    return withdraw(v);
}

}  // namespace

void GbmModel::validate() const {
    require_positive(s0, "s0");
    if (!std::isfinite(mu)) {
        throw DomainError("mu must be finite");
    }
    if (!std::isfinite(sigma) || sigma < 0.0) {
        throw DomainError("sigma must be non-negative");
    }
    require_positive(horizon, "horizon");
    if (steps < 1) {
        throw DomainError("steps must be at least 1");
    }
    if (!std::isfinite(start_time)) {
        throw DomainError("start time must be finite");
    }
}

PricePath simulate_gbm(const GbmModel& model, std::uint64_t seed) {
    model.validate();
    std::mt19937_64 rng(seed);
    const double dt = model.horizon / static_cast<double>(model.steps);
    const double drift = (model.mu - 0.5 * model.sigma * model.sigma) * dt;
    const double vol = model.sigma * std::sqrt(dt);

    PricePath path{{}, {}, seed, model};
    path.times.reserve(model.steps + 1);
    path.prices.reserve(model.steps + 1);
    path.times.push_back(model.start_time);
    path.prices.push_back(model.s0);
    double log_ret = 0.0;
    for (std::size_t i = 1; i <= model.steps; ++i) {
        // 53 random bits, offset half a unit so u is never 0 or 1
        const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
        log_ret += drift + vol * std_normal_inv_cdf(u);
        path.times.push_back(i == model.steps ? model.start_time + model.horizon
                                              : model.start_time + dt * static_cast<double>(i));
        path.prices.push_back(model.s0 * std::exp(log_ret));
    }
    return path;
}

double VaultState::mark(double price) const {
    return holdings.risky * price + holdings.stable + (lp ? pool_mark(*lp, price) : 0.0);
}

double VaultState::closure_residual() const {
    return initial_mark + market_pnl + fees - losses - mark(last_price);
}

VaultState make_vault(const Holdings& holdings, double price) {
    require_positive(price, "price");
    if (!(holdings.risky >= 0.0) || !(holdings.stable >= 0.0) || !std::isfinite(holdings.risky) ||
        !std::isfinite(holdings.stable)) {
        throw DomainError("holdings must be non-negative and finite");
    }
    VaultState v;
    v.holdings = holdings;
    v.last_price = price;
    v.initial_mark = v.mark(price);
    return v;
}

EpochResult run_epoch(const VaultState& vault, pool::PoolParams params, const PricePath& path,
                      double gamma, std::optional<std::size_t> stop_index) {
    params.gamma = gamma;
    params.validate();
    validate_path(path);
    const std::size_t n = path.times.size();
    const std::size_t last = stop_index.value_or(n - 1);
    if (last == 0 || last >= n) {
        throw ValidationError("run_epoch: stop index outside the path");
    }
    const double time_tol = 1e-12 * std::max(1.0, std::abs(params.expiry));
    if (!stop_index && std::abs(path.times.back() - params.expiry) > time_tol) {
        throw ValidationError("run_epoch: path does not end at the pool expiry");
    }
    if (path.times[last] > params.expiry + time_tol) {
        throw ValidationError("run_epoch: path runs past the pool expiry");
    }
    if (!(path.times.front() < params.expiry)) {
        throw ValidationError("run_epoch: path starts at or after the pool expiry");
    }

    VaultState v = vault;
    mark_to(v, path.prices.front());

    if (v.lp) {
        if (!same_pool(v.lp->params, params)) {
            throw ValidationError("run_epoch: live pool differs from the given parameters");
        }
        if (std::abs(v.lp->state.time - path.times.front()) > time_tol) {
            throw ValidationError("run_epoch: path does not start at the live pool's time");
        }
        v.lp->params.gamma = gamma;
    } else {
        const auto unit = pool::initialize(params, path.times.front(), path.prices.front(), 1.0);
        const double liquidity =
            std::min(v.holdings.risky / unit.risky, v.holdings.stable / unit.stable);
        if (!(liquidity > 0.0)) {
            throw LiquidityBoundError("run_epoch: vault holdings cannot mint any liquidity");
        }
        auto state = unit;
        state.liquidity = liquidity;
        v.holdings.risky = std::max(v.holdings.risky - state.total_risky(), 0.0);
        v.holdings.stable = std::max(v.holdings.stable - state.total_stable(), 0.0);
        v.lp = LiveLp{params, state};
    }

    auto& lp = *v.lp;
    EpochReport report;
    report.seed = path.seed;
    report.gamma = gamma;
    report.initial_mark = v.mark(path.prices.front());
    report.k_trace.reserve(last + 1);
    report.k_trace.push_back(lp.state.invariant);

    for (std::size_t i = 1; i <= last; ++i) {
        const double price = path.prices[i];
        const double pnl = risky_exposure(v) * (price - v.last_price);
        v.market_pnl += pnl;
        report.market_pnl += pnl;
        v.last_price = price;

        const bool final_step = !stop_index && i == n - 1;
        const double dt = final_step ? lp.params.expiry - lp.state.time
                                     : path.times[i] - path.times[i - 1];
        lp.state = pool::advance_time(lp.state, lp.params, dt);

        if (!pool::is_expired(lp.state, lp.params)) {
            const double before = pool_mark(lp, price);
            auto aligned = pool::arbitrage_align(lp.state, lp.params, price);
            lp.state = aligned.state;
            if (aligned.receipt) {
                const auto& r = *aligned.receipt;
                const double fee =
                    r.fee_paid * (r.direction == pool::Direction::RiskyIn ? price : 1.0);
                const double loss = fee - (pool_mark(lp, price) - before);
                v.fees += fee;
                v.losses += loss;
                report.fees += fee;
                report.loss += loss;
                ++report.trades;
            }
        }
        report.k_trace.push_back(lp.state.invariant);
    }

    const double final_price = path.prices[last];
    report.terminal_k = lp.state.invariant;
    if (pool::is_expired(lp.state, lp.params)) {
        const auto payout = pool::settle(lp.state, lp.params, final_price);
        const double liquidity = lp.state.liquidity;
        const double credited =
            liquidity * (payout.risky_out * final_price + payout.stable_out);
        const double loss = pool_mark(lp, final_price) - credited;
        v.losses += loss;
        report.loss += loss;
        v.holdings.risky += liquidity * payout.risky_out;
        v.holdings.stable += liquidity * payout.stable_out;
        report.replication_gap =
            payout.value_at(final_price) - std::min(final_price, lp.params.strike);
        report.settled = true;
        v.lp.reset();
        ++v.epoch;
    } else {
        report.replication_gap = lp.state.invariant;
    }
    report.terminal_mark = v.mark(final_price);

    spdlog::debug("epoch seed {}: fees {} loss {} terminal k {} trades {}", report.seed,
                  report.fees, report.loss, report.terminal_k, report.trades);
    return {v, report};
}

VaultState withdraw(const VaultState& vault) {
    VaultState v = vault;
    if (!v.lp) {
        return v;
    }
    if (pool::is_expired(v.lp->state, v.lp->params)) {
        throw ExpiryError("withdraw: pool has expired, settle it instead");
    }
    v.holdings.risky += v.lp->state.total_risky();
    v.holdings.stable += v.lp->state.total_stable();
    v.lp.reset();
    return v;
}

RolloverResult rollover_mispricing(const VaultState& vault, const pool::PoolParams& next, double t,
                                   double market_price) {
    VaultState v = prepare_rollover(vault, next, t, market_price);
    const double hx = v.holdings.risky;
    const double hy = v.holdings.stable;
    if (!(hx > 0.0) || !(hy > 0.0)) {
        throw LiquidityBoundError("rollover_mispricing: vault must hold both assets");
    }
    const double ratio = hy / hx;

    // Ry/Rx along the k = 0 curve falls monotonically in Rx; bisect on
    // z = Phi^-1(Rx) for the point matching the holdings ratio.
    auto gap = [&](double z) {
        const double rx = std_normal_cdf(z);
        return pool::stable_from_risky(rx, 0.0, next, t) - ratio * rx;
    };
    double lo = std_normal_inv_cdf(pool::kMinRisky);
    double hi = std_normal_inv_cdf(pool::kMaxRisky);
    if (!(gap(lo) > 0.0) || !(gap(hi) < 0.0)) {
        throw LiquidityBoundError("rollover_mispricing: holdings ratio maps outside the reserve band");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    const double rx = std_normal_cdf(0.5 * (lo + hi));
    const double liquidity = hx / rx;
    const auto start = pool::from_reserves(next, t, rx, ratio * rx, liquidity);

    const double before = v.mark(market_price);
    v.holdings = {};
    v.lp = LiveLp{next, start};
    auto aligned = pool::arbitrage_align(start, next, market_price);
    v.lp->state = aligned.state;

    double profit = 0.0;
    if (aligned.receipt) {
        const auto& r = *aligned.receipt;
        profit = r.direction == pool::Direction::RiskyIn
                     ? r.amount_out - r.amount_in * market_price
                     : r.amount_out * market_price - r.amount_in;
    }
    const double loss = before - v.mark(market_price);
    v.losses += loss;
    return {v, aligned.state, loss, profit, aligned.receipt};
}

void SlippageModel::validate() const {
    require_positive(depth, "slippage depth");
    if (!std::isfinite(impact_exponent) || impact_exponent < 1.0) {
        throw DomainError("impact exponent must be at least 1");
    }
}

double SlippageModel::received(double value) const {
    validate();
    if (!std::isfinite(value) || value < 0.0) {
        throw DomainError("slippage: trade value must be non-negative");
    }
    if (value == 0.0) {
        return 0.0;
    }
    return value / (1.0 + std::pow(value / depth, impact_exponent - 1.0));
}

RolloverResult rollover_swap(const VaultState& vault, const pool::PoolParams& next, double t,
                             double market_price, const SlippageModel& slippage) {
    slippage.validate();
    VaultState v = prepare_rollover(vault, next, t, market_price);
    const double m = market_price;
    const double rx = pool::risky_from_price(m, next, t);
    if (rx < pool::kMinRisky || rx > pool::kMaxRisky) {
        throw LiquidityBoundError("rollover_swap: market price maps outside the reserve band");
    }
    const double ry = pool::stable_from_risky(rx, 0.0, next, t);
    const double target = ry / rx;
    const double hx = v.holdings.risky;
    const double hy = v.holdings.stable;
    if (!(hx * m + hy > 0.0)) {
        throw LiquidityBoundError("rollover_swap: vault holds nothing");
    }

    // Excess in the ratio after trading `value` cash worth out of the heavy side.
    const bool sell_risky = hy < target * hx;
    auto excess = [&](double value) {
        const double got = slippage.received(value);
        return sell_risky ? (hy + got) - target * (hx - value / m)
                          : target * (hx + got / m) - (hy - value);
    };
    double value = 0.0;
    if (excess(0.0) < 0.0) {
        double lo = 0.0;
        double hi = sell_risky ? hx * m : hy;
        for (int i = 0; i < 300 && hi - lo > 1e-16 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) < 0.0 ? lo : hi) = mid;
        }
        value = hi;
    }
    const double got = slippage.received(value);
    if (sell_risky) {
        v.holdings.risky = std::max(hx - value / m, 0.0);
        v.holdings.stable = hy + got;
    } else {
        v.holdings.risky = hx + got / m;
        v.holdings.stable = std::max(hy - value, 0.0);
    }
    const double loss = value - got;
    v.losses += loss;

    const double liquidity = std::min(v.holdings.risky / rx, v.holdings.stable / ry);
    if (!(liquidity > 0.0)) {
        throw LiquidityBoundError("rollover_swap: nothing left to mint");
    }
    auto state = pool::initialize(next, t, m, liquidity);
    v.holdings.risky = std::max(v.holdings.risky - state.total_risky(), 0.0);
    v.holdings.stable = std::max(v.holdings.stable - state.total_stable(), 0.0);
    v.lp = LiveLp{next, state};
    return {v, state, loss, 0.0, std::nullopt};
}

std::string to_json_line(const EpochReport& report) {
    using detail::decimal;
    detail::json j;
    j["seed"] = report.seed;
    j["gamma"] = decimal(report.gamma);
    j["fees"] = decimal(report.fees);
    j["loss"] = decimal(report.loss);
    j["terminal_k"] = decimal(report.terminal_k);
    j["replication_gap"] = decimal(report.replication_gap);
    auto trace = detail::json::array();
    for (double k : report.k_trace) {
        trace.push_back(decimal(k));
    }
    j["k_trace"] = std::move(trace);
    j["market_pnl"] = decimal(report.market_pnl);
    j["initial_mark"] = decimal(report.initial_mark);
    j["terminal_mark"] = decimal(report.terminal_mark);
    j["trades"] = report.trades;
    j["settled"] = report.settled;
    return j.dump();
}

EpochReport report_from_json(const std::string& line) {
    detail::json j;
    try {
        j = detail::json::parse(line);
    } catch (const detail::json::parse_error& e) {
        throw ValidationError(std::string("epoch report: ") + e.what());
    }
    using detail::real_field;
    EpochReport r;
    try {
        r.seed = j.at("seed").get<std::uint64_t>();
        r.trades = j.at("trades").get<std::size_t>();
        r.settled = j.at("settled").get<bool>();
        for (const auto& k : j.at("k_trace")) {
            r.k_trace.push_back(k.is_string() ? io::parse_decimal(k.get<std::string>())
                                              : k.get<double>());
        }
    } catch (const detail::json::exception& e) {
        throw ValidationError(std::string("epoch report: ") + e.what());
    }
    r.gamma = real_field(j, "gamma");
    r.fees = real_field(j, "fees");
    r.loss = real_field(j, "loss");
    r.terminal_k = real_field(j, "terminal_k");
    r.replication_gap = real_field(j, "replication_gap");
    r.market_pnl = real_field(j, "market_pnl");
    r.initial_mark = real_field(j, "initial_mark");
    r.terminal_mark = real_field(j, "terminal_mark");
    return r;
}

}  // namespace rmm::vault
