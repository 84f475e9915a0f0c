#include "rmm/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json_util.hpp"
#include "rmm/error.hpp"
#include "rmm/numerics.hpp"

namespace rmm::derivatives {

using pool::PoolParams;
using pool::PoolState;

namespace {

// Per-unit reserve legs at the pool's own price. `stable` excludes k, so
// spot * risky + stable is the covered-call value the repayment cap uses.
struct Legs {
    double spot;
    double risky;
    double stable;
    double k;
};

Legs legs_at(const PoolParams& params, const PoolState& state,
             std::optional<double> terminal_price) {
    const double k = pool::invariant(state, params);
    if (pool::is_expired(state, params)) {
        if (!terminal_price) {
            throw ValidationError("expired pool: a terminal price is required");
        }
        const auto s = pool::settle(state, params, *terminal_price);
        return {*terminal_price, s.risky_out, s.stable_out + s.terminal_error - k, k};
    }
    if (terminal_price) {
        throw ValidationError("terminal price only applies to an expired pool");
    }
    return {pool::report_price(state, params), state.risky, state.stable - k, k};
}

void require_qty(double qty) {
    if (!std::isfinite(qty) || !(qty > 0.0)) {
        throw DomainError("quantity must be positive");
    }
}

void require_open(const PoolParams& params, const PoolState& state, const char* op) {
    params.validate();
    if (pool::is_expired(state, params)) {
        throw ExpiryError(std::string(op) + ": pool has expired");
    }
}

BorrowPosition base_position(Side side, const PoolParams& params, const PoolState& state,
                             double qty, double spot, double interest_rate) {
    if (!std::isfinite(interest_rate) || interest_rate < 0.0) {
        throw DomainError("interest rate must be non-negative");
    }
    BorrowPosition p{};
    p.side = side;
    p.qty = qty;
    p.open_time = state.time;
    p.open_price = spot;
    p.k_at_open = pool::invariant(state, params);
    p.interest_rate = interest_rate;
    p.pool = params;
    return p;
}

bool same_pool(const PoolParams& a, const PoolParams& b) {
    return a.strike == b.strike && a.sigma == b.sigma && a.expiry == b.expiry;
}

}  // namespace

BorrowPosition open_long_call(const PoolParams& params, const PoolState& state, double qty,
                              double interest_rate) {
    require_open(params, state, "open_long_call");
    require_qty(qty);
    const Legs legs = legs_at(params, state, std::nullopt);
    const double covered_call = legs.spot * legs.risky + legs.stable;

    BorrowPosition p =
        base_position(Side::LongCall, params, state, qty, legs.spot, interest_rate);
    p.collateral = {qty * (1.0 - covered_call / legs.spot), Denomination::Risky};
    p.premium = p.collateral;
    p.proceeds = {qty * (covered_call + legs.k) / legs.spot, Denomination::Risky};
    p.repayment = {Denomination::Risky, qty,
                   "qty * (S*Phi(-d1) + K*Phi(d2)) / S at close, risky units, k excluded"};
    return p;
}

BorrowPosition open_long_put(const PoolParams& params, const PoolState& state, double qty,
                             double interest_rate) {
    require_open(params, state, "open_long_put");
    require_qty(qty);
    const Legs legs = legs_at(params, state, std::nullopt);
    const double covered_call = legs.spot * legs.risky + legs.stable;

    BorrowPosition p = base_position(Side::LongPut, params, state, qty, legs.spot, interest_rate);
    p.collateral = {qty * (params.strike - covered_call), Denomination::Stable};
    p.premium = p.collateral;
    p.proceeds = {qty * (covered_call + legs.k), Denomination::Stable};
    p.repayment = {Denomination::Stable, qty * params.strike,
                   "qty * (S*Phi(-d1) + K*Phi(d2)) at close, stable units, k excluded"};
    return p;
}

CloseResult close_position(const BorrowPosition& position, const PoolParams& params,
                           const PoolState& state_at_close, std::optional<double> terminal_price) {
    params.validate();
    if (!same_pool(position.pool, params)) {
        throw DomainError("close_position: position belongs to a different pool");
    }
    if (state_at_close.time < position.open_time) {
        throw DomainError("close_position: close time precedes open time");
    }
    const Legs legs = legs_at(params, state_at_close, terminal_price);
    const double growth = 1.0 + position.interest_rate * (state_at_close.time - position.open_time);

    double per_unit = 0.0;
    switch (position.side) {
        case Side::LongCall: per_unit = (legs.spot * legs.risky + legs.stable) / legs.spot; break;
        case Side::LongPut: per_unit = legs.spot * legs.risky + legs.stable; break;
        case Side::ShortConc: per_unit = legs.stable; break;
        case Side::ShortAonp: per_unit = legs.risky; break;
    }
    const double repayment = position.qty * per_unit * growth;
    return {repayment, position.repayment.cap - repayment, position.repayment.denomination,
            legs.spot};
}

double BinarySplit::value(double spot, double tau, double k) const {
    const bs::OptionSpec spec{pool.strike, pool.sigma, tau};
    const auto b = bs::binary_values(spot, spec);
    if (sold_leg == BinaryLeg::Risky) {
        return units * b.aonp_cash;
    }
    return units * (pool.strike * b.conc + k);
}

BinarySplitPair split_binaries(const PoolParams& params, const PoolState& state, double units) {
    require_open(params, state, "split_binaries");
    require_qty(units);
    return {{BinaryLeg::Risky, units, units * state.risky, params},
            {BinaryLeg::Stable, units, units * state.stable, params}};
}

ShortPair short_binary(const PoolParams& params, const PoolState& state, const ShortOrder& first,
                       const std::optional<ShortOrder>& counterparty) {
    require_open(params, state, "short_binary");
    if (!counterparty) {
        throw CoincidenceOfWantsError("short_binary: no counterparty for the opposite leg");
    }
    if (first.leg == counterparty->leg) {
        throw CoincidenceOfWantsError("short_binary: both orders short the same leg");
    }
    if (first.qty != counterparty->qty) {
        throw CoincidenceOfWantsError("short_binary: leg quantities differ");
    }
    const double qty = first.qty;
    require_qty(qty);
    const Legs legs = legs_at(params, state, std::nullopt);
    const double K = params.strike;

    BorrowPosition conc = base_position(Side::ShortConc, params, state, qty, legs.spot, 0.0);
    // K - K*V_conc(t0) - k0 == K - Ry
    conc.collateral = {qty * (K - legs.stable - legs.k), Denomination::Stable};
    conc.premium = conc.collateral;
    conc.proceeds = {qty * state.stable, Denomination::Stable};
    conc.repayment = {Denomination::Stable, qty * K, "qty * K * Phi(d2) at close, stable units"};

    BorrowPosition aonp = base_position(Side::ShortAonp, params, state, qty, legs.spot, 0.0);
    aonp.collateral = {qty * (1.0 - legs.risky), Denomination::Risky};
    aonp.premium = aonp.collateral;
    aonp.proceeds = {qty * legs.risky, Denomination::Risky};
    aonp.repayment = {Denomination::Risky, qty, "qty * Phi(-d1) at close, risky units"};

    return {conc, aonp};
}

StraddleQuote compose_skewed_straddle(const PoolParams& params, const PoolState& state,
                                      double m_call, double m_put) {
    require_open(params, state, "compose_straddle");
    if (!(m_call >= 0.0) || !(m_put >= 0.0) || !std::isfinite(m_call) || !std::isfinite(m_put)) {
        throw DomainError("straddle leg counts must be non-negative");
    }
    const double spot = pool::report_price(state, params);
    const double v = pool::lpt_value(state, params, spot);
    StraddleQuote q{};
    q.spot = spot;
    q.lpt_value = v;
    q.call_cost_risky = 1.0 - v / spot;
    q.put_cost_cash = params.strike - v;
    // Both legs in risky units at the pool price.
    q.denominator = q.call_cost_risky + q.put_cost_cash / spot;
    q.m_call = m_call;
    q.m_put = m_put;
    q.total_cost_risky = m_call * q.call_cost_risky + m_put * q.put_cost_cash / spot;
    return q;
}

StraddleQuote compose_straddle(const PoolParams& params, const PoolState& state,
                               double risky_budget) {
    require_qty(risky_budget);
    StraddleQuote q = compose_skewed_straddle(params, state, 0.0, 0.0);
    if (!(q.denominator > 0.0) || !std::isfinite(q.denominator)) {
        throw InfeasibleError("compose_straddle: non-positive cost per straddle");
    }
    const double m = risky_budget / q.denominator;
    q.m_call = m;
    q.m_put = m;
    q.total_cost_risky = m * q.denominator;
    return q;
}

double straddle_terminal_payoff(const StraddleQuote& quote, double strike, double terminal_price) {
    return quote.m_call * std::max(terminal_price - strike, 0.0) +
           quote.m_put * std::max(strike - terminal_price, 0.0);
}

FutureQuote compose_long_future(const PoolParams& params, const PoolState& state) {
    require_open(params, state, "compose_long_future");
    FutureQuote q{};
    q.spot = pool::report_price(state, params);
    q.cc_risky = state.risky;
    q.cc_stable = state.stable;
    q.lpt_mark = q.spot * state.risky + state.stable;
    q.call_cost_risky = 1.0 - q.lpt_mark / q.spot;
    q.net_cost_risky = q.cc_risky + q.cc_stable / q.spot + q.call_cost_risky;
    return q;
}

double long_future_terminal_value(const PoolParams& params, const PoolState& expired_state,
                                  double terminal_price) {
    const auto s = pool::settle(expired_state, params, terminal_price);
    return s.value_at(terminal_price) + std::max(terminal_price - params.strike, 0.0);
}

std::string to_string(Side side) {
    switch (side) {
        case Side::LongCall: return "long-call";
        case Side::LongPut: return "long-put";
        case Side::ShortConc: return "short-conc";
        case Side::ShortAonp: return "short-aonp";
    }
    return "unknown";
}

std::string to_string(Denomination d) { return d == Denomination::Risky ? "risky" : "stable"; }

namespace {

Side side_from_string(const std::string& s) {
    for (Side side : {Side::LongCall, Side::LongPut, Side::ShortConc, Side::ShortAonp}) {
        if (to_string(side) == s) {
            return side;
        }
    }
    throw ValidationError("unknown position side '" + s + "'");
}

Denomination denomination_from_string(const std::string& s) {
    if (s == "risky") return Denomination::Risky;
    if (s == "stable") return Denomination::Stable;
    throw ValidationError("unknown denomination '" + s + "'");
}

detail::json amount_json(const Amount& a) {
    return {{"value", detail::decimal(a.value)}, {"denomination", to_string(a.denomination)}};
}

Amount amount_from(const detail::json& j) {
    return {detail::real_field(j, "value"),
            denomination_from_string(j.at("denomination").get<std::string>())};
}

}  // namespace

std::string to_json_line(const BorrowPosition& p) {
    using detail::decimal;
    detail::json j;
    j["side"] = to_string(p.side);
    j["qty"] = decimal(p.qty);
    j["open_time"] = decimal(p.open_time);
    j["open_price"] = decimal(p.open_price);
    j["collateral"] = amount_json(p.collateral);
    j["premium"] = amount_json(p.premium);
    j["proceeds"] = amount_json(p.proceeds);
    j["repayment"] = {{"denomination", to_string(p.repayment.denomination)},
                      {"cap", decimal(p.repayment.cap)},
                      {"rule", p.repayment.description}};
    j["k_at_open"] = decimal(p.k_at_open);
    j["interest_rate"] = decimal(p.interest_rate);
    j["pool"] = {{"K", decimal(p.pool.strike)},
                 {"sigma", decimal(p.pool.sigma)},
                 {"T", decimal(p.pool.expiry)},
                 {"gamma", decimal(p.pool.gamma)}};
    return j.dump();
}

BorrowPosition position_from_json(const std::string& line) {
    try {
        const auto j = detail::json::parse(line);
        using detail::real_field;
        BorrowPosition p{};
        p.side = side_from_string(j.at("side").get<std::string>());
        p.qty = real_field(j, "qty");
        p.open_time = real_field(j, "open_time");
        p.open_price = real_field(j, "open_price");
        p.collateral = amount_from(j.at("collateral"));
        p.premium = amount_from(j.at("premium"));
        p.proceeds = amount_from(j.at("proceeds"));
        const auto& r = j.at("repayment");
        p.repayment = {denomination_from_string(r.at("denomination").get<std::string>()),
                       real_field(r, "cap"), r.at("rule").get<std::string>()};
        p.k_at_open = real_field(j, "k_at_open");
        p.interest_rate = real_field(j, "interest_rate");
        const auto& pj = j.at("pool");
        p.pool = {real_field(pj, "K"), real_field(pj, "sigma"), real_field(pj, "T"),
                  real_field(pj, "gamma")};
        return p;
    } catch (const detail::json::exception& e) {
        throw ValidationError(std::string("position ledger: ") + e.what());
    }
}

void write_ledger(std::ostream& out, const std::vector<BorrowPosition>& positions) {
    for (const auto& p : positions) {
        out << to_json_line(p) << '\n';
    }
}

std::vector<BorrowPosition> read_ledger(std::istream& in) {
    std::vector<BorrowPosition> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(position_from_json(line));
        }
    }
    return out;
}

}  // namespace rmm::derivatives
