#pragma once

// Theta vault: a pool of covered-call liquidity rolled from epoch to epoch.
//
// During an epoch the pool is kept at the external price by a myopic
// arbitrageur who aligns it after every time step. Fees are the only source
// of income; everything the arbitrageur takes is booked as loss. At expiry
// the pool settles and the vault holds the payout, ready to roll into the
// next pool either by trading on an external market (rollover_swap) or by
// depositing its holdings as-is into a mispriced pool and letting
// arbitrageurs fix the price (rollover_mispricing).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmm/pool.hpp"

namespace rmm::vault {

struct GbmModel {
    double s0;
    double mu = 0.0;
    double sigma;
    double horizon;          ///< years
    std::size_t steps = 512;
    double start_time = 0.0;

    void validate() const;
};

struct PricePath {
    std::vector<double> times;   ///< strictly increasing, starts at start_time
    std::vector<double> prices;  ///< same length, positive
    std::uint64_t seed;
    GbmModel model;
};

/// Log-increments are N((mu - sigma^2/2) dt, sigma^2 dt). Normals come from
/// a 64-bit Mersenne Twister through the inverse normal CDF, so a path is
/// fully determined by (model, seed) on every platform.
[[nodiscard]] PricePath simulate_gbm(const GbmModel& model, std::uint64_t seed);

struct Holdings {
    double risky = 0.0;
    double stable = 0.0;
};

struct LiveLp {
    pool::PoolParams params;
    pool::PoolState state;
};

struct VaultState {
    Holdings holdings;  ///< assets outside the pool
    std::optional<LiveLp> lp;
    std::size_t epoch = 0;
    double fees = 0.0;        ///< cumulative, cash at the trade price
    double losses = 0.0;      ///< cumulative: arbitrage, settlement and rollover
    double market_pnl = 0.0;  ///< revaluation of held risky between marks
    double initial_mark = 0.0;
    double last_price = 0.0;  ///< price of the most recent mark

    /// Cash value of holdings plus pool reserves at `price`.
    [[nodiscard]] double mark(double price) const;
    /// initial + market_pnl + fees - losses - mark(last_price); zero up to rounding.
    [[nodiscard]] double closure_residual() const;
};

[[nodiscard]] VaultState make_vault(const Holdings& holdings, double price);

struct EpochReport {
    std::uint64_t seed = 0;
    double gamma = 1.0;
    double fees = 0.0;
    double loss = 0.0;
    double terminal_k = 0.0;
    /// Terminal LPT payout per unit liquidity minus the covered-call payoff
    /// min(S_T, K). Equal to the terminal invariant.
    double replication_gap = 0.0;
    std::vector<double> k_trace;  ///< k at mint, then after every step
    double market_pnl = 0.0;
    double initial_mark = 0.0;
    double terminal_mark = 0.0;
    std::size_t trades = 0;
    bool settled = false;
};

struct EpochResult {
    VaultState vault;
    EpochReport report;
};

/// Runs the pool along `path`, using `gamma` as the fee parameter. A vault
/// without a live pool mints one at k = 0 at the first path point, as much
/// liquidity as its holdings allow. The path has to end at the pool expiry
/// unless `stop_index` ends the run early, in which case the pool stays live.
[[nodiscard]] EpochResult run_epoch(const VaultState& vault, pool::PoolParams params,
                                    const PricePath& path, double gamma,
                                    std::optional<std::size_t> stop_index = std::nullopt);

/// Pulls the reserves of a live, unexpired pool back into holdings.
[[nodiscard]] VaultState withdraw(const VaultState& vault);

struct RolloverResult {
    VaultState vault;
    pool::PoolState state;  ///< the new pool after any arbitrage
    double loss;
    double arbitrage_profit;  ///< zero for the swap route
    std::optional<pool::SwapReceipt> receipt;
};

/// Deposits every holding into the next pool at the vault's own ratio: the
/// pool starts at the point of the k = 0 curve with Ry/Rx equal to
/// stable/risky holdings, which misprices it relative to `market_price`.
/// Arbitrage then aligns it; the loss is the drop in mark value. Throws
/// LiquidityBoundError if the ratio maps outside the reserve band.
[[nodiscard]] RolloverResult rollover_mispricing(const VaultState& vault,
                                                 const pool::PoolParams& next, double t,
                                                 double market_price);

/// Price impact on an external market: a trade worth v (cash) delivers
/// v / (1 + (v/depth)^(p-1)) of the other asset, p the impact exponent.
/// p = 2 is the constant-product curve depth*v/(depth + v).
struct SlippageModel {
    double depth;
    double impact_exponent = 2.0;

    void validate() const;
    [[nodiscard]] double received(double value) const;
    [[nodiscard]] double cost(double value) const { return value - received(value); }
};

/// Trades holdings on the external market to the exact k = 0 mint ratio at
/// `market_price`, then mints. The loss is the slippage cost.
[[nodiscard]] RolloverResult rollover_swap(const VaultState& vault, const pool::PoolParams& next,
                                           double t, double market_price,
                                           const SlippageModel& slippage);

/// One JSON object, reals as decimal strings.
[[nodiscard]] std::string to_json_line(const EpochReport& report);
[[nodiscard]] EpochReport report_from_json(const std::string& line);

}  // namespace rmm::vault
