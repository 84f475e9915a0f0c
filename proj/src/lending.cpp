#include "rmm/lending.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rmm/blackscholes.hpp"
#include "rmm/error.hpp"
#include "rmm/numerics.hpp"

namespace rmm::lending {

namespace {

void require_positive(double x, const std::string& what) {
    if (!std::isfinite(x) || !(x > 0.0)) {
        throw DomainError(what + " must be positive and finite");
    }
}

void validate_query(const HedgeQuery& q) {
    require_positive(q.reserve, "reserve");
    require_positive(q.entry_price, "entry price");
    require_positive(q.current_price, "current price");
    require_positive(q.cash_entry, "entry cash price");
    require_positive(q.cash_now, "current cash price");
    require_positive(q.sigma, "sigma");
    require_positive(q.tau, "tau");
    if (q.strike) {
        require_positive(*q.strike, "strike");
    }
}

bs::VanillaValues cash_values(const HedgeQuery& q) {
    validate_query(q);
    const double strike_cash = q.strike.value_or(q.entry_price) / q.cash_entry;
    const double spot_cash = q.current_price / q.cash_now;
    return bs::vanilla_values(spot_cash, {strike_cash, q.sigma, q.tau});
}

double leg_value(const Leg& leg, const Prices& prices) {
    const auto it = prices.find(leg.asset);
    if (it == prices.end()) {
        throw ValidationError("no price for asset '" + leg.asset + "'");
    }
    require_positive(it->second, "price of " + leg.asset);
    return it->second * leg.reserve;
}

double price_of(const Prices& prices, const std::string& asset) {
    const auto it = prices.find(asset);
    if (it == prices.end()) {
        throw ValidationError("no price for asset '" + asset + "'");
    }
    require_positive(it->second, "price of " + asset);
    return it->second;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

}  // namespace

void LendingPosition::validate() const {
    for (const auto* legs : {&collateral, &debt}) {
        for (const auto& leg : *legs) {
            require_positive(leg.reserve, "reserve of " + leg.asset);
            require_positive(leg.entry_price, "entry price of " + leg.asset);
        }
    }
}

Health health_factor(const LendingPosition& position, const Prices& prices) {
    position.validate();
    double collateral = 0.0;
    for (const auto& leg : position.collateral) {
        collateral += leg_value(leg, prices);
    }
    double debt = 0.0;
    for (const auto& leg : position.debt) {
        debt += leg_value(leg, prices);
    }
    if (debt == 0.0) {
        return {std::numeric_limits<double>::infinity(), 0.0};
    }
    return {collateral / debt, debt / collateral};
}

double put_value_in_asset(const HedgeQuery& q) {
    return cash_values(q).put_cash * q.cash_now / q.current_price;
}

double call_value_in_asset(const HedgeQuery& q) {
    return cash_values(q).call_cash * q.cash_now / q.current_price;
}

double put_hedge_quantity(const HedgeQuery& q) {
    validate_query(q);
    if (q.current_price >= q.entry_price) {
        return 0.0;
    }
    const double delta = q.reserve * (q.entry_price / q.current_price - 1.0);
    const double put = put_value_in_asset(q);
    if (!(put > 0.0)) {
        throw DegenerateOptionError("put_hedge_quantity: put value is not positive");
    }
    return delta / put;
}

double put_hedge_quantity(double reserve, double p0, double pt, double cash0, double cash_t,
                          double sigma, double tau) {
    return put_hedge_quantity(HedgeQuery{reserve, p0, pt, cash0, cash_t, sigma, tau, std::nullopt});
}

double call_hedge_quantity(const HedgeQuery& q) {
    validate_query(q);
    if (q.current_price <= q.entry_price) {
        return 0.0;
    }
    const double delta = q.reserve * (1.0 - q.entry_price / q.current_price);
    const double call = call_value_in_asset(q);
    if (!(call > 0.0)) {
        throw DegenerateOptionError("call_hedge_quantity: call value is not positive");
    }
    return delta / call;
}

double call_hedge_quantity(double reserve, double p0, double pt, double cash0, double cash_t,
                           double sigma, double tau) {
    return call_hedge_quantity(
        HedgeQuery{reserve, p0, pt, cash0, cash_t, sigma, tau, std::nullopt});
}

SurfaceGrid default_grid(HedgeKind kind, double entry_price, std::vector<double> strikes,
                         double sigma, double tau) {
    SurfaceGrid g;
    g.entry_price = entry_price;
    g.strikes = std::move(strikes);
    g.sigma = sigma;
    g.tau = tau;
    if (kind == HedgeKind::Put) {
        g.price_lo = 0.01 * entry_price;
        g.price_hi = entry_price;
        g.scan_lo = 1e-6 * entry_price;
        g.scan_hi = entry_price;
    } else {
        g.price_lo = entry_price;
        g.price_hi = 5.0 * entry_price;
        g.scan_lo = entry_price;
        g.scan_hi = 1e6 * entry_price;
    }
    return g;
}

RequirementSurface strike_adjusted_requirement(HedgeKind kind, const SurfaceGrid& grid) {
    require_positive(grid.entry_price, "entry price");
    require_positive(grid.tau, "tau");
    if (grid.price_points < 2) {
        throw ValidationError("surface grid needs at least 2 price points");
    }
    if (!(grid.price_lo > 0.0 && grid.price_lo < grid.price_hi) ||
        !(grid.scan_lo > 0.0 && grid.scan_lo < grid.scan_hi)) {
        throw ValidationError("surface grid ranges must be positive and increasing");
    }

    auto ratio = [&](double price, double strike) {
        const HedgeQuery q{1.0, grid.entry_price, price, 1.0, 1.0, grid.sigma, grid.tau, strike};
        return kind == HedgeKind::Put ? put_hedge_quantity(q) : call_hedge_quantity(q);
    };

    RequirementSurface out{kind, {}, {}, 0};
    const auto prices = linspace(grid.price_lo, grid.price_hi, grid.price_points);
    for (double strike : grid.strikes) {
        require_positive(strike, "strike");
        bool flagged = false;
        for (double p : prices) {
            try {
                out.points.push_back({p, strike, ratio(p, strike)});
            } catch (const DegenerateOptionError&) {
                flagged = true;
                ++out.flagged_cells;
            }
        }

        StrikeRequirement req{strike, 0.0, 0.0, flagged};
        try {
            const auto best = numerics::find_max_1d(
                [&](double log_price) { return ratio(std::exp(log_price), strike); },
                std::log(grid.scan_lo), std::log(grid.scan_hi), {1e-12, 1e-12, 400});
            req.worst_price = std::exp(best.argmax);
            req.max_ratio = best.value;
        } catch (const DegenerateOptionError&) {
            req.flagged = true;
        } catch (const NumericError&) {
            req.flagged = true;
        }
        out.requirements.push_back(req);
    }
    return out;
}

io::CsvTable surface_table(const RequirementSurface& surface) {
    io::CsvTable t{{"price", "strike", "quantity_ratio"}, {}};
    t.rows.reserve(surface.points.size());
    for (const auto& p : surface.points) {
        t.rows.push_back({p.price, p.strike, p.quantity_ratio});
    }
    return t;
}

io::CsvTable requirement_table(const RequirementSurface& surface) {
    io::CsvTable t{{"strike", "worst_price", "max_quantity_ratio"}, {}};
    for (const auto& r : surface.requirements) {
        if (!r.flagged) {
            t.rows.push_back({r.strike, r.worst_price, r.max_ratio});
        }
    }
    return t;
}

const HedgeLeg* HedgePlan::find(const std::string& asset, HedgeKind kind) const {
    const auto& legs = kind == HedgeKind::Put ? puts : calls;
    for (const auto& leg : legs) {
        if (leg.asset == asset) {
            return &leg;
        }
    }
    return nullptr;
}

HedgePlan build_hedge_plan(const LendingPosition& position, double sigma, double tau,
                           const std::map<std::string, double>& sigma_overrides) {
    position.validate();
    require_positive(sigma, "sigma");
    require_positive(tau, "tau");
    auto sigma_for = [&](const std::string& asset) {
        const auto it = sigma_overrides.find(asset);
        return it == sigma_overrides.end() ? sigma : it->second;
    };

    HedgePlan plan;
    for (const auto& leg : position.collateral) {
        plan.puts.push_back(
            {leg.asset, HedgeKind::Put, leg.reserve, leg.entry_price, sigma_for(leg.asset), tau});
    }
    for (const auto& leg : position.debt) {
        plan.calls.push_back(
            {leg.asset, HedgeKind::Call, leg.reserve, leg.entry_price, sigma_for(leg.asset), tau});
    }
    return plan;
}

RebalanceResult rebalance_on_exercise(const LendingPosition& position, const HedgePlan& plan,
                                      const Prices& prices, double cash_entry, double cash_now) {
    position.validate();
    RebalanceResult out{position, plan, {}, {}};

    auto exercise = [&](Leg& leg, HedgeKind kind) {
        const double now = price_of(prices, leg.asset);
        const bool breached =
            kind == HedgeKind::Put ? now < leg.entry_price : now > leg.entry_price;
        if (!breached) {
            return;
        }
        auto& legs = kind == HedgeKind::Put ? out.remaining.puts : out.remaining.calls;
        HedgeLeg* hedge = nullptr;
        for (auto& h : legs) {
            if (h.asset == leg.asset) {
                hedge = &h;
            }
        }
        if (hedge == nullptr) {
            throw std::logic_error("hedge plan has no option for breached leg " + leg.asset);
        }

        const HedgeQuery q{leg.reserve, leg.entry_price, now,         cash_entry,
                           cash_now,    hedge->sigma,    hedge->tau, hedge->strike};
        double delta = 0.0;
        double consumed = 0.0;
        if (kind == HedgeKind::Put) {
            delta = leg.reserve * (leg.entry_price / now - 1.0);
            consumed = delta / put_value_in_asset(q);
        } else {
            delta = leg.reserve * (1.0 - leg.entry_price / now);
            consumed = delta / call_value_in_asset(q);
        }
        if (!std::isfinite(consumed) || consumed > hedge->quantity * (1.0 + 1e-12)) {
            throw std::logic_error("hedge plan insufficient for leg " + leg.asset);
        }

        hedge->quantity = std::max(hedge->quantity - consumed, 0.0);
        leg.reserve += kind == HedgeKind::Put ? delta : -delta;
        leg.entry_price = now;

        const bs::OptionSpec atm{now / cash_now, hedge->sigma, hedge->tau};
        const auto v = bs::vanilla_values(now / cash_now, atm);
        out.exercised.push_back({leg.asset, kind, delta, consumed});
        out.refill.push_back(
            {leg.asset, kind, consumed, kind == HedgeKind::Put ? v.put_cash : v.call_cash});
    };

    for (auto& leg : out.position.collateral) {
        exercise(leg, HedgeKind::Put);
    }
    for (auto& leg : out.position.debt) {
        exercise(leg, HedgeKind::Call);
    }
    return out;
}

}  // namespace rmm::lending
