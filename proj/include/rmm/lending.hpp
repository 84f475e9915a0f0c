#pragma once

// Liquidation-free lending: long options on every leg of a borrow position
// keep its health factor from dropping below the entry value.
//
// Collateral legs are protected with puts, debt legs with calls. Option
// values come from the Black-Scholes formulas with r = 0; prices are quoted
// in a numéraire and converted to the option's cash asset through explicit
// cash prices (1 for a stablecoin numéraire).

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rmm/io.hpp"

namespace rmm::lending {

struct Leg {
    std::string asset;
    double reserve;
    double entry_price;
};

struct LendingPosition {
    std::vector<Leg> collateral;
    std::vector<Leg> debt;
    std::string numeraire = "USD";

    void validate() const;
};

using Prices = std::map<std::string, double>;

struct Health {
    double collateral_ratio;  ///< C = V_c / V_debt; +inf with no debt
    double ltv;               ///< 1 / C
};

[[nodiscard]] Health health_factor(const LendingPosition& position, const Prices& prices);

/// Inputs to the per-leg hedge quantity. `strike` defaults to the entry
/// price (the at-the-money plan).
struct HedgeQuery {
    double reserve;
    double entry_price;
    double current_price;
    double cash_entry = 1.0;
    double cash_now = 1.0;
    double sigma;
    double tau;
    std::optional<double> strike;
};

/// Put value expressed in units of the hedged asset.
[[nodiscard]] double put_value_in_asset(const HedgeQuery& q);
/// Call value expressed in units of the hedged asset.
[[nodiscard]] double call_value_in_asset(const HedgeQuery& q);

/// alpha = R_x (P0/P_t - 1) / V_put, V_put in asset units. Zero when the
/// price has not fallen. Throws DegenerateOptionError if the put is worthless.
[[nodiscard]] double put_hedge_quantity(const HedgeQuery& q);
[[nodiscard]] double put_hedge_quantity(double reserve, double p0, double pt, double cash0,
                                        double cash_t, double sigma, double tau);

/// beta = R_y (1 - P0/P_t) / V_call, V_call in asset units. Zero when the
/// price has not risen.
[[nodiscard]] double call_hedge_quantity(const HedgeQuery& q);
[[nodiscard]] double call_hedge_quantity(double reserve, double p0, double pt, double cash0,
                                         double cash_t, double sigma, double tau);

enum class HedgeKind { Put, Call };

struct SurfaceGrid {
    double entry_price = 1.0;
    std::vector<double> strikes;
    double price_lo;  ///< exported curve range
    double price_hi;
    std::size_t price_points = 200;
    double scan_lo;  ///< domain searched for the worst price
    double scan_hi;
    double sigma = 0.85;
    double tau = 8.0 / 12.0;
};

/// Curve range [0.01 P0, P0] for puts and [P0, 5 P0] for calls; the scan
/// reaches six decades past P0 toward the asymptote.
[[nodiscard]] SurfaceGrid default_grid(HedgeKind kind, double entry_price,
                                       std::vector<double> strikes, double sigma, double tau);

struct SurfacePoint {
    double price;
    double strike;
    double quantity_ratio;  ///< alpha/R or beta/R
};

struct StrikeRequirement {
    double strike;
    double worst_price;
    double max_ratio;
    bool flagged;  ///< option value non-positive somewhere on the scan
};

struct RequirementSurface {
    HedgeKind kind;
    std::vector<SurfacePoint> points;  ///< unflagged cells only
    std::vector<StrikeRequirement> requirements;
    std::size_t flagged_cells = 0;
};

/// For each strike: the hedge ratio curve over the price grid and its
/// maximum over the scan domain, searched in log-price.
[[nodiscard]] RequirementSurface strike_adjusted_requirement(HedgeKind kind,
                                                             const SurfaceGrid& grid);

/// price, strike, quantity_ratio
[[nodiscard]] io::CsvTable surface_table(const RequirementSurface& surface);
/// strike, worst_price, max_quantity_ratio (flagged strikes omitted)
[[nodiscard]] io::CsvTable requirement_table(const RequirementSurface& surface);

struct HedgeLeg {
    std::string asset;
    HedgeKind kind;
    double quantity;
    double strike;
    double sigma;
    double tau;
};

struct HedgePlan {
    std::vector<HedgeLeg> puts;
    std::vector<HedgeLeg> calls;

    [[nodiscard]] const HedgeLeg* find(const std::string& asset, HedgeKind kind) const;
};

/// At-the-money plan: R_xi puts per collateral leg, R_yj calls per debt leg,
/// struck at the entry prices. `sigma_overrides` replaces the shared sigma
/// for the named assets.
[[nodiscard]] HedgePlan build_hedge_plan(const LendingPosition& position, double sigma, double tau,
                                         const std::map<std::string, double>& sigma_overrides = {});

struct Exercise {
    std::string asset;
    HedgeKind kind;
    double delta;     ///< asset units sourced
    double consumed;  ///< options closed to source it
};

struct Refill {
    std::string asset;
    HedgeKind kind;
    double quantity;
    double unit_cost_cash;  ///< at-the-money value at the re-based strike
};

struct RebalanceResult {
    LendingPosition position;  ///< breached legs re-based to the current price
    HedgePlan remaining;
    std::vector<Exercise> exercised;
    std::vector<Refill> refill;
};

/// Restores every breached P*R term to its entry value by closing options
/// from the plan. Favourable moves are left alone. Throws std::logic_error
/// if the plan holds fewer options than a breach needs.
[[nodiscard]] RebalanceResult rebalance_on_exercise(const LendingPosition& position,
                                                    const HedgePlan& plan, const Prices& prices,
                                                    double cash_entry = 1.0,
                                                    double cash_now = 1.0);

}  // namespace rmm::lending
