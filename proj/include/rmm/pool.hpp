#pragma once

// The RMM-01 pool: a two-asset CFMM whose trading function
//
//     phi(Rx, Ry) = Ry - K * Phi(Phi^-1(1 - Rx) - sigma * sqrt(tau))
//
// makes one unit of liquidity track a Black-Scholes covered call struck at K.
// Reserves are stored per unit of liquidity; the invariant k is re-derived
// from them after every mutation and equals V_LPT - V_cc.

#include <optional>
#include <string>

#include "rmm/blackscholes.hpp"

namespace rmm::pool {

/// Reserve band for Rx. Trades that leave it fail with LiquidityBoundError.
inline constexpr double kMinRisky = 1e-9;
inline constexpr double kMaxRisky = 1.0 - 1e-9;

inline constexpr double kDefaultGamma = 0.997;

struct PoolParams {
    double strike;
    double sigma;
    double expiry;  ///< absolute time in years
    double gamma = kDefaultGamma;  ///< fraction of each input credited to the curve

    void validate() const;
    [[nodiscard]] double tau_at(double t) const { return expiry - t; }
    [[nodiscard]] bs::OptionSpec option_at(double t) const { return {strike, sigma, tau_at(t)}; }
};

struct PoolState {
    double risky;      ///< Rx per unit liquidity
    double stable;     ///< Ry per unit liquidity
    double invariant;  ///< k
    double time;       ///< current time, <= expiry
    double liquidity;  ///< L

    [[nodiscard]] double total_risky() const { return risky * liquidity; }
    [[nodiscard]] double total_stable() const { return stable * liquidity; }
};

[[nodiscard]] inline bool is_expired(const PoolState& s, const PoolParams& p) {
    return s.time >= p.expiry;
}

enum class Direction { RiskyIn, StableIn };

struct SwapReceipt {
    Direction direction;
    double amount_in;   ///< pool totals, including the fee
    double fee_paid;    ///< (1 - gamma) * amount_in, in the input asset
    double amount_out;  ///< pool totals, in the other asset
    double k_before;
    double k_after;
    double price_after;
};

struct SwapResult {
    PoolState state;
    SwapReceipt receipt;
};

struct AlignResult {
    PoolState state;
    std::optional<SwapReceipt> receipt;  ///< empty when already inside the no-arb band
};

/// Per-unit-liquidity payout at expiry.
struct Settlement {
    double risky_out;
    double stable_out;
    /// Signed shortfall (<= 0) when the invariant is too negative to be paid
    /// from physical reserves; zero otherwise.
    double terminal_error;

    /// Cash value of the payout at `price`, shortfall included.
    [[nodiscard]] double value_at(double price) const {
        return risky_out * price + stable_out + terminal_error;
    }
};

/// Clamps a risky reserve into [kMinRisky, kMaxRisky].
[[nodiscard]] double clamp_risky(double risky);

/// Rx = Phi(-ln(S/K)/(sigma sqrt(tau)) - sigma sqrt(tau)/2), unclamped.
/// Throws ExpiryError when t >= T.
[[nodiscard]] double risky_from_price(double price, const PoolParams& params, double t);

/// Ry = K Phi(Phi^-1(1 - Rx) - sigma sqrt(tau)) + k. Valid up to and including t = T.
[[nodiscard]] double stable_from_risky(double risky, double k, const PoolParams& params, double t);

/// Evaluates the trading function at the stored reserves.
[[nodiscard]] double invariant(const PoolState& state, const PoolParams& params);

/// S = K exp(Phi^-1(1 - Rx) sigma sqrt(tau) - sigma^2 tau / 2).
[[nodiscard]] double report_price(const PoolState& state, const PoolParams& params);

/// Fresh pool at `price` on the k = 0 curve.
[[nodiscard]] PoolState initialize(const PoolParams& params, double t, double price,
                                   double liquidity);

/// Pool holding the given per-unit reserves; k is whatever the curve says.
[[nodiscard]] PoolState from_reserves(const PoolParams& params, double t, double risky,
                                      double stable, double liquidity);

/// Trades `amount_in` (pool totals) against the curve.
///
/// The whole input stays in the reserves, but only gamma * amount_in is
/// credited when solving the level set, so the fee accrues to k:
///   risky in:  out = L * (Ry - Ry(Rx + gamma*dx, k))
///   stable in: out = L * (Rx - Rx*),  Rx* = Phi(-Phi^-1((Ry + gamma*dy - k)/K) - sigma sqrt(tau))
/// with dx, dy the per-unit inputs. Stable-in trades raise k by exactly (1-gamma)*dy.
[[nodiscard]] SwapResult swap(const PoolState& state, const PoolParams& params, Direction direction,
                              double amount_in);

/// Moves time forward with reserves fixed and re-derives k. Steps that reach
/// or pass T clamp to T, leaving the pool expired.
[[nodiscard]] PoolState advance_time(const PoolState& state, const PoolParams& params, double dt);

/// Trades the pool to the edge of the no-arbitrage band around
/// `market_price`: [gamma * m, m / gamma]. The target reserve comes from
/// risky_from_price and is clamped into the reserve band, so a pool pinned
/// at its boundary may end outside the band.
[[nodiscard]] AlignResult arbitrage_align(const PoolState& state, const PoolParams& params,
                                          double market_price);

/// Value of one unit of liquidity: covered call + k.
[[nodiscard]] double lpt_value(const PoolState& state, const PoolParams& params, double price);

/// Terminal redemption of one unit of liquidity. At or above the strike the
/// position pays K + k in stable; below it pays one risky unit plus any
/// positive k, with a negative k reported as terminal_error.
[[nodiscard]] Settlement settle(const PoolState& state, const PoolParams& params,
                               double terminal_price);

/// {K, sigma, T, gamma, Rx, Ry, k, t, L}, every real as a round-trip decimal string.
[[nodiscard]] std::string to_json(const PoolParams& params, const PoolState& state);

struct Snapshot {
    PoolParams params;
    PoolState state;
};

/// Inverse of to_json. Throws ValidationError on missing or malformed fields.
[[nodiscard]] Snapshot snapshot_from_json(const std::string& text);

}  // namespace rmm::pool
