// Acceptance suite: one line per criterion, exit code 1 if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rmm/blackscholes.hpp"
#include "rmm/derivatives.hpp"
#include "rmm/error.hpp"
#include "rmm/lending.hpp"
#include "rmm/pool.hpp"
#include "rmm/vault.hpp"

using namespace rmm;
using pool::PoolParams;
using pool::PoolState;

namespace {

double D(oracle::real x) { return static_cast<double>(x); }

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

struct Sample {
    double S, K, sigma, tau;
};

// Random (S, K, sigma, tau) whose pool point sits inside the reserve band.
std::vector<Sample> grid_samples(std::size_t n, std::uint64_t seed, std::size_t* rejected) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Sample> out;
    *rejected = 0;
    while (out.size() < n) {
        const double K = 50.0 + 4000.0 * u(rng);
        const double S = K * std::exp(3.0 * (u(rng) - 0.5));
        const double sigma = 0.05 + 1.45 * u(rng);
        const double tau = 0.01 + 2.99 * u(rng);
        const double rx = D(oracle::black_scholes(S, K, sigma, tau).aonp / S);
        if (rx < pool::kMinRisky || rx > pool::kMaxRisky) {
            ++*rejected;
            continue;
        }
        out.push_back({S, K, sigma, tau});
    }
    return out;
}

Verdict oracle_equivalence() {
    std::size_t rejected = 0;
    const auto samples = grid_samples(10000, 101, &rejected);
    double worst_lpt = 0.0;
    for (const auto& s : samples) {
        const PoolParams p{s.K, s.sigma, s.tau, 0.997};
        const auto st = pool::initialize(p, 0.0, s.S, 1.0);
        const auto o = oracle::black_scholes(s.S, s.K, s.sigma, s.tau);
        const double mark = s.S * st.risky + st.stable;
        worst_lpt = std::max({worst_lpt, std::abs(mark - D(o.covered_call)),
                              std::abs(pool::lpt_value(st, p, s.S) - D(o.covered_call))});
    }

    // long call / put: open at one state, close at a later one, against the oracle
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_call = 0.0, worst_put = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const PoolParams p{200.0 + 3000.0 * u(rng), 0.2 + 1.2 * u(rng), 0.2 + 2.0 * u(rng), 0.997};
        const double t0 = 0.1 * p.expiry * u(rng);
        const double tf = t0 + (p.expiry - t0) * 0.95 * u(rng);
        const double rx0 = 0.001 + 0.998 * u(rng);
        const double rxf = 0.001 + 0.998 * u(rng);
        const auto open =
            pool::from_reserves(p, t0, rx0, pool::stable_from_risky(rx0, 0.0, p, t0), 1.0);
        const auto close =
            pool::from_reserves(p, tf, rxf, pool::stable_from_risky(rxf, 0.0, p, tf), 1.0);
        const double S = pool::report_price(close, p);
        const auto o = oracle::black_scholes(S, p.strike, p.sigma, p.expiry - tf);
        const auto c = derivatives::close_position(derivatives::open_long_call(p, open, 1.0), p, close);
        const auto q = derivatives::close_position(derivatives::open_long_put(p, open, 1.0), p, close);
        worst_call = std::max(worst_call, std::abs(c.net_payoff - D(o.call / S)));
        worst_put = std::max(worst_put, std::abs(q.net_payoff - D(o.put)));
    }
    const bool ok = worst_lpt < 1e-10 && worst_call < 1e-10 && worst_put < 1e-10;
    return {ok, fmt("max |LPT - oracle| %.3g, long call %.3g, long put %.3g", worst_lpt, worst_call,
                    worst_put) +
                    " (" + std::to_string(rejected) + " draws outside the reserve band redrawn)"};
}

Verdict parity_suite() {
    std::size_t rejected = 0;
    const auto samples = grid_samples(10000, 101, &rejected);
    double worst = 0.0;
    for (const auto& s : samples) {
        const bs::OptionSpec spec{s.K, s.sigma, s.tau};
        const auto v = bs::vanilla_values(s.S, spec);
        const auto b = bs::binary_values(s.S, spec);
        const double cc = bs::covered_call_value(s.S, spec);
        worst = std::max({worst, std::abs(s.S * v.call_risky - v.put_cash - (s.S - s.K)),
                          std::abs(b.conc + b.conp - 1.0), std::abs(b.aonp_cash + b.aonc_cash - s.S),
                          std::abs(cc + v.call_cash - s.S)});
    }
    return {worst < 1e-10, fmt("max parity residual %.3g over 10000 points", worst)};
}

Verdict price_consistency() {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const PoolParams p{100.0 + 3000.0 * u(rng), 0.1 + 1.4 * u(rng), 0.05 + 2.0 * u(rng), 0.997};
        const double t = 0.5 * p.expiry * u(rng);
        const double rx = 0.05 + 0.9 * u(rng);
        const double k = p.strike * 0.05 * u(rng);
        const auto s = pool::from_reserves(p, t, rx, pool::stable_from_risky(rx, k, p, t), 1.0);
        const double h = 1e-6;
        const auto f = [&](oracle::real x) {
            return static_cast<oracle::real>(pool::stable_from_risky(static_cast<double>(x), k, p, t));
        };
        const double slope = D(oracle::central_difference(f, rx, h));
        const double price = pool::report_price(s, p);
        worst = std::max(worst, std::abs(price + slope) / price);
    }
    return {worst < 1e-5, fmt("max relative |price + dRy/dRx| %.3g over 1000 samples", worst)};
}

Verdict swap_feasibility() {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int decreased = 0, flat_with_fee = 0, moved_without_fee = 0, infeasible = 0;
    double worst_free = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double K = 100.0 + 3000.0 * u(rng);
        const double sigma = 0.1 + 1.4 * u(rng);
        const double T = 0.1 + 2.0 * u(rng);
        const double t = 0.8 * T * u(rng);
        const double rx = 0.02 + 0.96 * u(rng);
        const PoolParams fee{K, sigma, T, 0.997};
        const PoolParams free{K, sigma, T, 1.0};
        const auto s = pool::from_reserves(fee, t, rx, pool::stable_from_risky(rx, 0.0, fee, t),
                                           0.5 + 10.0 * u(rng));
        const bool risky_in = u(rng) < 0.5;
        const double frac = 0.001 + 0.5 * u(rng);
        const double amount = risky_in ? frac * (1.0 - s.risky) * s.liquidity
                                       : frac * (K - s.stable) * s.liquidity;
        const auto dir = risky_in ? pool::Direction::RiskyIn : pool::Direction::StableIn;
        try {
            const auto a = pool::swap(s, fee, dir, amount);
            const auto b = pool::swap(s, free, dir, amount);
            const double dk_fee = a.state.invariant - s.invariant;
            const double dk_free = b.state.invariant - s.invariant;
            decreased += dk_fee < 0.0 ? 1 : 0;
            flat_with_fee += dk_fee > 0.0 ? 0 : 1;
            worst_free = std::max(worst_free, std::abs(dk_free) / K);
            moved_without_fee += std::abs(dk_free) < 1e-10 * K ? 0 : 1;
        } catch (const LiquidityBoundError&) {
            ++infeasible;
        }
    }
    const bool ok = decreased == 0 && flat_with_fee == 0 && moved_without_fee == 0 && infeasible == 0;
    return {ok, "fee swaps: " + std::to_string(decreased) + " decreased k, " +
                    std::to_string(flat_with_fee) + " did not raise it; fee-free max |dk|/K " +
                    fmt("%.3g", worst_free) + "; " + std::to_string(infeasible) + " infeasible"};
}

Verdict hedge_limits() {
    const double sigma = 0.85, tau = 8.0 / 12.0;
    const double a = lending::put_hedge_quantity(1.0, 1.0, 1e-6, 1.0, 1.0, sigma, tau);
    const double b = lending::call_hedge_quantity(1.0, 1.0, 1e6, 1.0, 1.0, sigma, tau);
    // extended-precision cross-check of the limits
    const double ao = D(oracle::alpha_ratio(1.0L, 1e-6L, 1.0L, 0.85L, 8.0L / 12.0L));
    const double bo = D(oracle::beta_ratio(1.0L, 1e6L, 1.0L, 0.85L, 8.0L / 12.0L));
    bool mono = true;
    double prev = INFINITY;
    for (int i = 0; i < 1000; ++i) {
        const double pt = 1e-3 + (1.0 - 1e-3) * i / 1000.0;
        const double x = lending::put_hedge_quantity(1.0, 1.0, pt, 1.0, 1.0, sigma, tau);
        mono = mono && x <= prev;
        prev = x;
    }
    prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
        const double pt = 1.0 + 50.0 * i / 1000.0;
        const double x = lending::call_hedge_quantity(1.0, 1.0, pt, 1.0, 1.0, sigma, tau);
        mono = mono && x >= prev;
        prev = x;
    }
    const bool ok = a >= 1.0 - 1e-4 && a <= 1.0 && b >= 1.0 - 1e-4 && b <= 1.0 && mono &&
                    std::abs(a - ao) < 1e-9 && std::abs(b - bo) < 1e-9;
    return {ok, fmt("alpha(1e-6 P0)/R = %.10f, beta(1e6 P0)/R = %.10f, ", a, b) +
                    (mono ? "monotone" : "NOT monotone") + " on 1000-point grids"};
}

Verdict otm_interior_maximum() {
    const double sigma = 0.85, tau = 8.0 / 12.0;
    std::string detail;
    bool ok = true;
    for (const auto kind : {lending::HedgeKind::Put, lending::HedgeKind::Call}) {
        const bool put = kind == lending::HedgeKind::Put;
        const std::vector<double> strikes =
            put ? std::vector<double>{0.7, 0.75, 0.8, 0.85, 0.9}
                : std::vector<double>{1.1, 1.15, 1.2, 1.25, 1.3};
        auto grid = lending::default_grid(kind, 1.0, strikes, sigma, tau);
        const auto surf = lending::strike_adjusted_requirement(kind, grid);
        double min_margin = INFINITY;
        for (const auto& r : surf.requirements) {
            const long double K = r.strike;
            auto ratio = [&](double x) {
                return D(put ? oracle::alpha_ratio(1.0L, x, K, 0.85L, 8.0L / 12.0L)
                             : oracle::beta_ratio(1.0L, x, K, 0.85L, 8.0L / 12.0L));
            };
            // endpoint neighbourhoods: the first and last 1% of the scan in log-price
            const double llo = std::log(grid.scan_lo), lhi = std::log(grid.scan_hi);
            const double span = lhi - llo;
            const double near_lo = std::max(
                oracle::grid_max([&](double z) { return ratio(std::exp(z)); }, llo, llo + 0.01 * span,
                                 1000)
                    .second,
                put ? 1.0 / r.strike : 0.0);
            const double near_hi = std::max(
                oracle::grid_max([&](double z) { return ratio(std::exp(z)); }, lhi - 0.01 * span,
                                 lhi - 1e-9, 1000)
                    .second,
                put ? 0.0 : 1.0);
            const auto dense = oracle::grid_max([&](double z) { return ratio(std::exp(z)); },
                                                llo + 0.01 * span, lhi - 0.01 * span, 100000);
            const bool interior = !r.flagged && std::log(r.worst_price) > llo + 0.01 * span &&
                                  std::log(r.worst_price) < lhi - 0.01 * span;
            const double margin = r.max_ratio - std::max(near_lo, near_hi);
            const bool global = std::abs(r.max_ratio - dense.second) < 1e-6 * dense.second &&
                                r.max_ratio >= dense.second * (1.0 - 1e-12);
            ok = ok && interior && margin > 0.0 && global;
            min_margin = std::min(min_margin, margin);
        }
        detail += std::string(put ? "puts K/P0 0.70-0.90" : "calls K/P0 1.10-1.30") +
                  fmt(": min excess over endpoint neighbourhoods %.4f; ", min_margin);
    }
    return {ok, detail + "argmax interior and matching a 1e5-point scan"};
}

Verdict rebalance_exactness() {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = INFINITY;
    int failures = 0;
    int exercised = 0;
    for (int i = 0; i < 1000; ++i) {
        lending::LendingPosition pos;
        lending::Prices entry, now;
        const int nc = 1 + static_cast<int>(3 * u(rng));
        const int nd = static_cast<int>(3 * u(rng));
        for (int j = 0; j < nc + nd; ++j) {
            const std::string name = "A" + std::to_string(j);
            const double p0 = 1.0 + 5000.0 * u(rng);
            const lending::Leg leg{name, 0.1 + 100.0 * u(rng), p0};
            (j < nc ? pos.collateral : pos.debt).push_back(leg);
            entry[name] = p0;
            now[name] = p0 * std::exp(1.2 * (u(rng) - 0.5));
        }
        // force at least one breach
        auto& first = pos.collateral[0];
        now[first.asset] = std::min(now[first.asset], first.entry_price * (0.3 + 0.69 * u(rng)));
        const double c0 = lending::health_factor(pos, entry).collateral_ratio;
        const auto plan = lending::build_hedge_plan(pos, 0.2 + 1.2 * u(rng), 0.05 + 1.5 * u(rng));
        const auto r = lending::rebalance_on_exercise(pos, plan, now);
        exercised += static_cast<int>(r.exercised.size());
        const double c1 = lending::health_factor(r.position, now).collateral_ratio;
        double rel = std::isinf(c0) ? (std::isinf(c1) ? 0.0 : -INFINITY) : (c1 - c0) / c0;
        // every breached term restored exactly
        for (const auto& leg : r.position.collateral) {
            const auto* orig = &*std::find_if(pos.collateral.begin(), pos.collateral.end(),
                                              [&](const auto& l) { return l.asset == leg.asset; });
            if (now[leg.asset] < orig->entry_price) {
                const double v0 = orig->reserve * orig->entry_price;
                rel = std::min(rel, -std::abs(leg.reserve * now[leg.asset] - v0) / v0);
            }
        }
        worst = std::min(worst, rel);
        failures += rel < -1e-9 ? 1 : 0;
    }
    return {failures == 0,
            fmt("worst relative change in C %.3g over 1000 scenarios", worst) + " (" +
                std::to_string(exercised) + " legs exercised, " + std::to_string(failures) +
                " below entry)"};
}

Verdict vault_homogeneity() {
    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int cases = 0;
    for (int i = 0; i < 50; ++i) {
        const PoolParams next{1000.0 + 2000.0 * u(rng), 0.3 + 1.0 * u(rng), 1.0, 0.997};
        const double m = next.strike * std::exp(0.6 * (u(rng) - 0.5));
        const double t = 0.3 * u(rng);
        const auto aligned = pool::initialize(next, t, m, 1.0);
        // at least 5% off so the start lies outside the fee band
        const double off = 0.05 + 0.25 * u(rng);
        const double skew = u(rng) < 0.5 ? 1.0 - off : 1.0 + off;
        const vault::Holdings h{aligned.total_risky(), skew * aligned.total_stable()};
        double base = 0.0;
        for (double lambda : {1.0, 2.0, 10.0}) {
            const auto v = vault::make_vault({lambda * h.risky, lambda * h.stable}, m);
            const double loss = vault::rollover_mispricing(v, next, t, m).loss / lambda;
            if (lambda == 1.0) {
                base = loss;
            } else {
                const double dev = base != 0.0 ? std::abs(loss - base) / std::abs(base)
                                               : (loss == 0.0 ? 0.0 : INFINITY);
                worst = std::max(worst, dev);
            }
        }
        ++cases;
    }
    return {worst < 1e-9,
            fmt("max relative deviation of loss/lambda %.3g", worst) + " over " +
                std::to_string(cases) + " mispriced starts, lambda in {1, 2, 10}"};
}

Verdict theta_leak() {
    const PoolParams p{2000.0, 0.85, 8.0 / 12.0, 0.997};
    const vault::GbmModel m{2000.0, 0.0, 0.85, 8.0 / 12.0, 512, 0.0};
    const auto mint = pool::initialize(p, 0.0, 2000.0, 1.0);
    const auto v0 = vault::make_vault({mint.total_risky(), mint.total_stable()}, 2000.0);
    int leak_violations = 0, fee_higher = 0;
    double max_free_k = -INFINITY;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto path = vault::simulate_gbm(m, seed);
        const auto off = vault::run_epoch(v0, p, path, 1.0).report;
        const auto on = vault::run_epoch(v0, p, path, 0.997).report;
        max_free_k = std::max(max_free_k, off.terminal_k);
        leak_violations += off.terminal_k <= 1e-12 ? 0 : 1;
        fee_higher += on.terminal_k > off.terminal_k ? 1 : 0;
    }
    const bool ok = leak_violations == 0 && fee_higher >= 190;
    return {ok, fmt("fee-free max terminal k %.4g; fee-on k higher in %.0f/200 seeds", max_free_k,
                    fee_higher)};
}

Verdict futures_identity() {
    std::mt19937_64 rng(110);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, worst_call = 0.0;
    for (int i = 0; i < 100; ++i) {
        const PoolParams p{100.0 + 3000.0 * u(rng), 0.1 + 1.4 * u(rng), 0.1 + 2.0 * u(rng), 0.997};
        const double t = 0.9 * p.expiry * u(rng);
        const double rx = 0.01 + 0.98 * u(rng);
        const auto s = pool::from_reserves(p, t, rx, pool::stable_from_risky(rx, 0.0, p, t), 1.0);
        const auto q = derivatives::compose_long_future(p, s);
        worst = std::max(worst, std::abs(q.net_cost_risky - 1.0));
        const auto o = oracle::black_scholes(q.spot, p.strike, p.sigma, p.expiry - t);
        worst_call = std::max(worst_call, std::abs(q.call_cost_risky - D(o.call / q.spot)));
    }
    return {worst < 1e-12 && worst_call < 1e-10,
            fmt("max |net cost - 1| %.3g, call leg vs oracle %.3g over 100 states", worst,
                worst_call)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"parity suite", parity_suite},
        {"price consistency", price_consistency},
        {"swap feasibility", swap_feasibility},
        {"hedge limits", hedge_limits},
        {"OTM non-monotonicity", otm_interior_maximum},
        {"rebalance exactness", rebalance_exactness},
        {"vault homogeneity", vault_homogeneity},
        {"theta leak", theta_leak},
        {"futures identity", futures_identity},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v{false, ""};
        try {
            v = criteria[i].run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("[%s] %zu. %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
