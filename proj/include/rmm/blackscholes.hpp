#pragma once

// Black-Scholes values for the payoffs an RMM-01 pool decomposes into.
//
// The risk-free rate is zero throughout: none of the replication formulas
// carry a discount factor. At tau == 0 every value is the terminal payoff,
// with a spot exactly at the strike treated as finishing in the money for
// calls (the same tie-break the pool uses at settlement).

namespace rmm::bs {

struct OptionSpec {
    double strike;
    double sigma;
    double tau;

    /// Throws DomainError unless strike > 0, sigma > 0 and tau >= 0.
    void validate() const;
};

struct Moneyness {
    double d1;
    double d2;
};

/// Values in the denomination named by the field.
struct VanillaValues {
    double call_risky;  ///< call value in units of the risky asset
    double call_cash;   ///< call value in the cash asset
    double put_cash;    ///< put value in the cash asset
};

struct BinaryValues {
    double conc;       ///< cash-or-nothing call, per unit cash payout
    double conp;       ///< cash-or-nothing put, per unit cash payout
    double aonp_cash;  ///< asset-or-nothing put, in cash
    double aonc_cash;  ///< asset-or-nothing call, in cash
};

/// Throws ExpiryError when tau == 0.
[[nodiscard]] Moneyness d1_d2(double spot, const OptionSpec& spec);

/// S·Φ(-d1) + K·Φ(d2); min(S, K) at expiry.
[[nodiscard]] double covered_call_value(double spot, const OptionSpec& spec);

[[nodiscard]] VanillaValues vanilla_values(double spot, const OptionSpec& spec);

[[nodiscard]] BinaryValues binary_values(double spot, const OptionSpec& spec);

}  // namespace rmm::bs
