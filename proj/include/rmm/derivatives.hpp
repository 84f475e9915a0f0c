#pragma once

// Option constructions on top of an RMM-01 pool.
//
// Long calls and puts come from borrowing LPTs and selling the underlying
// reserves into one asset; binaries come from selling (or shorting) one of
// the two reserves. All repayment amounts exclude the invariant k, which caps
// the borrower's debt at K worth of LPTs (or one risky unit for the risky
// binary leg). Values are read off the pool's own reserves at its reported
// price, never from an external feed; at expiry the settlement payout is
// used instead.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rmm/pool.hpp"

namespace rmm::derivatives {

enum class Side { LongCall, LongPut, ShortConc, ShortAonp };
enum class Denomination { Risky, Stable };

struct Amount {
    double value;
    Denomination denomination;
};

struct RepaymentRule {
    Denomination denomination;
    double cap;  ///< maximum repayment for the whole position
    std::string description;
};

struct BorrowPosition {
    Side side;
    double qty;
    double open_time;
    double open_price;
    Amount collateral;
    Amount premium;   ///< what the borrower pays up front
    Amount proceeds;  ///< k-excluded value received from breaking the LPT
    RepaymentRule repayment;
    double k_at_open;
    double interest_rate = 0.0;  ///< flat simple rate on the repayment, per year
    pool::PoolParams pool;

    /// Collateral plus proceeds: everything the borrower holds against the debt.
    [[nodiscard]] double holdings() const { return collateral.value + proceeds.value; }
};

struct CloseResult {
    double repayment;
    double net_payoff;
    Denomination denomination;
    double spot;
};

[[nodiscard]] BorrowPosition open_long_call(const pool::PoolParams& params,
                                            const pool::PoolState& state, double qty,
                                            double interest_rate = 0.0);

[[nodiscard]] BorrowPosition open_long_put(const pool::PoolParams& params,
                                           const pool::PoolState& state, double qty,
                                           double interest_rate = 0.0);

/// Repays the position against the pool at its current time. An expired
/// pool needs `terminal_price`; an unexpired one prices off report_price and
/// rejects an explicit terminal price.
[[nodiscard]] CloseResult close_position(const BorrowPosition& position,
                                         const pool::PoolParams& params,
                                         const pool::PoolState& state_at_close,
                                         std::optional<double> terminal_price = std::nullopt);

enum class BinaryLeg { Risky, Stable };

struct BinarySplit {
    BinaryLeg sold_leg;
    double units;    ///< liquidity units the leg was cut from
    double premium;  ///< reserve amount sold, in the leg's own asset
    pool::PoolParams pool;

    /// Cash value of the leg for the given spot, time to expiry and invariant:
    /// risky leg = S Phi(-d1) (asset-or-nothing put), stable leg = K Phi(d2) + k.
    [[nodiscard]] double value(double spot, double tau, double k) const;
};

struct BinarySplitPair {
    BinarySplit risky;
    BinarySplit stable;
};

/// Cuts `units` of liquidity into its two reserves; the premium of each
/// leg equals its current reserve.
[[nodiscard]] BinarySplitPair split_binaries(const pool::PoolParams& params,
                                             const pool::PoolState& state, double units);

struct ShortOrder {
    BinaryLeg leg;
    double qty;
};

struct ShortPair {
    BorrowPosition conc_short;  ///< short the stable leg: long cash-or-nothing put
    BorrowPosition aonp_short;  ///< short the risky leg: long asset-or-nothing call
};

/// Opens both binary shorts on the same lent LPT. The two orders must name
/// opposite legs with equal quantity; anything else throws
/// CoincidenceOfWantsError.
[[nodiscard]] ShortPair short_binary(const pool::PoolParams& params, const pool::PoolState& state,
                                     const ShortOrder& first,
                                     const std::optional<ShortOrder>& counterparty);

struct StraddleQuote {
    double spot;
    double lpt_value;
    double call_cost_risky;  ///< per call, 1 - V_LPT/S
    double put_cost_cash;    ///< per put, K - V_LPT
    double denominator;      ///< risky-equivalent cost of one call plus one put
    double m_call;
    double m_put;
    double total_cost_risky;
};

/// Largest symmetric straddle a budget of `risky_budget` risky units buys:
/// m = x / (1 - V_LPT/S + (K - V_LPT)/S). Throws InfeasibleError when the
/// denominator is not positive.
[[nodiscard]] StraddleQuote compose_straddle(const pool::PoolParams& params,
                                             const pool::PoolState& state, double risky_budget);

/// Directionally skewed variant with independent call and put counts.
[[nodiscard]] StraddleQuote compose_skewed_straddle(const pool::PoolParams& params,
                                                    const pool::PoolState& state, double m_call,
                                                    double m_put);

/// Cash payoff of the straddle at expiry.
[[nodiscard]] double straddle_terminal_payoff(const StraddleQuote& quote, double strike,
                                              double terminal_price);

struct FutureQuote {
    double spot;
    double cc_risky;         ///< Rx deposited for the covered-call leg
    double cc_stable;        ///< Ry deposited for the covered-call leg
    double lpt_mark;         ///< S Rx + Ry
    double call_cost_risky;  ///< 1 - V_LPT/S
    double net_cost_risky;   ///< sum of all legs in risky units; identically 1
};

[[nodiscard]] FutureQuote compose_long_future(const pool::PoolParams& params,
                                              const pool::PoolState& state);

/// Cash value at expiry of the covered-call leg (via settlement) plus the call.
[[nodiscard]] double long_future_terminal_value(const pool::PoolParams& params,
                                                const pool::PoolState& expired_state,
                                                double terminal_price);

[[nodiscard]] std::string to_string(Side side);
[[nodiscard]] std::string to_string(Denomination d);

/// One JSON object per line, reals as decimal strings.
[[nodiscard]] std::string to_json_line(const BorrowPosition& position);
[[nodiscard]] BorrowPosition position_from_json(const std::string& line);

void write_ledger(std::ostream& out, const std::vector<BorrowPosition>& positions);
[[nodiscard]] std::vector<BorrowPosition> read_ledger(std::istream& in);

}  // namespace rmm::derivatives
