#include "rmm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json_util.hpp"
#include "rmm/blackscholes.hpp"
#include "rmm/derivatives.hpp"
#include "rmm/error.hpp"
#include "rmm/io.hpp"
#include "rmm/lending.hpp"
#include "rmm/pool.hpp"
#include "rmm/vault.hpp"

namespace rmm::cli {

namespace {

namespace fs = std::filesystem;
using detail::json;
using io::format_decimal;

// Flag values merged with the config file, keyed by flag name without dashes.
class Values {
public:
    std::map<std::string, std::string> raw;

    [[nodiscard]] bool has(const std::string& key) const { return raw.count(key) != 0; }

    [[nodiscard]] double real(const std::string& key) const {
        const auto it = raw.find(key);
        if (it == raw.end()) {
            throw ValidationError("missing required option --" + key);
        }
        try {
            return io::parse_decimal(trim(it->second));
        } catch (const ValidationError&) {
            throw ValidationError("--" + key + ": not a number: '" + it->second + "'");
        }
    }

    [[nodiscard]] double real_or(const std::string& key, double fallback) const {
        return has(key) ? real(key) : fallback;
    }

    [[nodiscard]] std::vector<double> reals_or(const std::string& key,
                                               std::vector<double> fallback) const {
        if (!has(key)) {
            return fallback;
        }
        std::vector<double> out;
        std::stringstream ss(raw.at(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(io::parse_decimal(trim(item)));
            } catch (const ValidationError&) {
                throw ValidationError("--" + key + ": not a number: '" + item + "'");
            }
        }
        if (out.empty()) {
            throw ValidationError("--" + key + ": empty list");
        }
        return out;
    }

    [[nodiscard]] std::uint64_t integer_or(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) {
            return fallback;
        }
        return parse_integer(key, raw.at(key));
    }

    [[nodiscard]] std::vector<std::uint64_t> integers(const std::string& key) const {
        std::vector<std::uint64_t> out;
        std::stringstream ss(raw.at(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            out.push_back(parse_integer(key, item));
        }
        if (out.empty()) {
            throw ValidationError("--" + key + ": empty list");
        }
        return out;
    }

    [[nodiscard]] std::string text_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw.at(key) : fallback;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }

    static std::uint64_t parse_integer(const std::string& key, const std::string& text) {
        const std::string t = trim(text);
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
            throw ValidationError("--" + key + ": not a non-negative integer: '" + text + "'");
        }
        return v;
    }
};

std::string json_scalar_text(const std::string& key, const json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_integer()) {
        return v.dump();
    }
    if (v.is_number()) {
        return format_decimal(v.get<double>());
    }
    throw ValidationError("config key '" + key + "' has an unsupported value");
}

// Fills every option not given on the command line from the config file.
void merge_config(Values& values, const std::string& path, const std::vector<std::string>& keys) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read config file '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    for (const auto& [key, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ValidationError("config: unknown key '" + key + "'");
        }
        if (values.has(key)) {
            continue;  // flags win
        }
        if (v.is_array()) {
            std::string joined;
            for (const auto& item : v) {
                joined += (joined.empty() ? "" : ",") + json_scalar_text(key, item);
            }
            values.raw[key] = joined;
        } else {
            values.raw[key] = json_scalar_text(key, v);
        }
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string q = "\"";
    for (char c : s) {
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
}

using Fields = std::vector<std::pair<std::string, std::string>>;

void print_fields(std::ostream& out, const Fields& fields) {
    out << "field,value\n";
    for (const auto& [k, v] : fields) {
        out << k << ',' << csv_field(v) << '\n';
    }
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

fs::path output_dir(const Values& v) {
    fs::path dir = v.text_or("out", ".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
    }
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

// ---- price ----------------------------------------------------------------

void cmd_price(const Values& v, std::ostream& out) {
    const double S = v.real("S");
    const double K = v.real("K");
    const double tau = v.real("tau");
    const double k = v.real_or("k", 0.0);
    // sigma is irrelevant at expiry; any positive placeholder works
    const double sigma = tau > 0.0 ? v.real("sigma") : v.real_or("sigma", 1.0);
    if (!(S > 0.0)) {
        throw ValidationError("--S must be positive");
    }
    const bs::OptionSpec spec{K, sigma, tau};
    spec.validate();

    const double cc = bs::covered_call_value(S, spec);
    const auto van = bs::vanilla_values(S, spec);
    const auto bin = bs::binary_values(S, spec);
    std::vector<std::pair<std::string, double>> rows{
        {"lpt_value", cc + k},       {"covered_call", cc},   {"call_risky", van.call_risky},
        {"call_cash", van.call_cash}, {"put_cash", van.put_cash}, {"conc", bin.conc},
        {"conp", bin.conp},          {"aonp_cash", bin.aonp_cash}, {"aonc_cash", bin.aonc_cash},
    };
    if (tau > 0.0) {
        const auto m = bs::d1_d2(S, spec);
        rows.emplace_back("d1", m.d1);
        rows.emplace_back("d2", m.d2);
    }
    std::ostringstream csv;
    csv << "quantity,value\n";
    for (const auto& [name, value] : rows) {
        csv << name << ',' << format_decimal(value) << '\n';
    }
    out << csv.str();
    if (v.has("out")) {
        write_file(output_dir(v) / "price.csv", csv.str());
    }
}

// ---- construct ------------------------------------------------------------

// Expired pool that kept its invariant: what a perfectly arbitraged,
// fee-free pool would settle as.
pool::PoolState ideal_expiry(const pool::PoolParams& params, double k, double liquidity) {
    return pool::from_reserves(params, params.expiry, 0.5,
                               pool::stable_from_risky(0.5, k, params, params.expiry), liquidity);
}

void add_position(Fields& f, const std::string& prefix, const derivatives::BorrowPosition& p) {
    using derivatives::to_string;
    f.emplace_back(prefix + "side", to_string(p.side));
    f.emplace_back(prefix + "qty", format_decimal(p.qty));
    f.emplace_back(prefix + "open_price", format_decimal(p.open_price));
    f.emplace_back(prefix + "collateral", format_decimal(p.collateral.value));
    f.emplace_back(prefix + "collateral_denomination", to_string(p.collateral.denomination));
    f.emplace_back(prefix + "premium", format_decimal(p.premium.value));
    f.emplace_back(prefix + "proceeds", format_decimal(p.proceeds.value));
    f.emplace_back(prefix + "repayment_cap", format_decimal(p.repayment.cap));
    f.emplace_back(prefix + "repayment_denomination", to_string(p.repayment.denomination));
    f.emplace_back(prefix + "repayment_rule", p.repayment.description);
    f.emplace_back(prefix + "k_at_open", format_decimal(p.k_at_open));
}

void cmd_construct(const std::string& name, const Values& v, std::ostream& out) {
    const double K = v.real("K");
    const double sigma = v.real("sigma");
    const double tau = v.real("tau");
    const double t = v.real_or("t", 0.0);
    const double S = v.real_or("S", K);
    const double L = v.real_or("L", 1.0);
    const double qty = v.real_or("qty", 1.0);
    if (!(tau > 0.0)) {
        throw ValidationError("--tau must be positive to open a construction");
    }
    const pool::PoolParams params{K, sigma, t + tau, v.real_or("gamma", pool::kDefaultGamma)};
    params.validate();
    const auto state = pool::initialize(params, t, S, L);
    const double k = state.invariant;

    const auto grid_points = v.integer_or("grid-points", 11);
    if (grid_points < 2) {
        throw ValidationError("--grid-points must be at least 2");
    }
    const auto grid = linspace(v.real_or("grid-lo", 0.5 * K), v.real_or("grid-hi", 1.5 * K),
                               static_cast<std::size_t>(grid_points));
    if (!(grid.front() > 0.0) || !(grid.back() > grid.front())) {
        throw ValidationError("terminal price grid must be positive and increasing");
    }
    const auto expired = ideal_expiry(params, k, L);

    Fields f{{"construction", name},
             {"spot", format_decimal(pool::report_price(state, params))},
             {"strike", format_decimal(K)},
             {"k", format_decimal(k)}};
    std::vector<std::string> columns{"terminal_price"};
    std::vector<std::vector<double>> rows;
    std::vector<derivatives::BorrowPosition> ledger;

    if (name == "long-call" || name == "long-put") {
        const auto pos = name == "long-call"
                             ? derivatives::open_long_call(params, state, qty, v.real_or("rate", 0.0))
                             : derivatives::open_long_put(params, state, qty, v.real_or("rate", 0.0));
        add_position(f, "", pos);
        ledger.push_back(pos);
        columns.push_back("net_payoff");
        columns.push_back("net_payoff_cash");
        for (double st : grid) {
            const auto r = derivatives::close_position(pos, params, expired, st);
            const double cash = r.denomination == derivatives::Denomination::Risky
                                    ? r.net_payoff * st
                                    : r.net_payoff;
            rows.push_back({st, r.net_payoff, cash});
        }
    } else if (name == "split-binaries") {
        const auto pair = derivatives::split_binaries(params, state, qty);
        const double spot = pool::report_price(state, params);
        f.emplace_back("risky_leg_premium", format_decimal(pair.risky.premium));
        f.emplace_back("stable_leg_premium", format_decimal(pair.stable.premium));
        f.emplace_back("risky_leg_value", format_decimal(pair.risky.value(spot, tau, k)));
        f.emplace_back("stable_leg_value", format_decimal(pair.stable.value(spot, tau, k)));
        columns.push_back("risky_leg_payoff");
        columns.push_back("stable_leg_payoff");
        for (double st : grid) {
            rows.push_back({st, pair.risky.value(st, 0.0, k), pair.stable.value(st, 0.0, k)});
        }
    } else if (name == "short-binary") {
        const double other = v.real_or("counterparty-qty", qty);
        const auto pair = derivatives::short_binary(
            params, state, {derivatives::BinaryLeg::Stable, qty},
            derivatives::ShortOrder{derivatives::BinaryLeg::Risky, other});
        add_position(f, "conc_short.", pair.conc_short);
        add_position(f, "aonp_short.", pair.aonp_short);
        ledger.push_back(pair.conc_short);
        ledger.push_back(pair.aonp_short);
        columns.push_back("conc_short_net");
        columns.push_back("aonp_short_net");
        for (double st : grid) {
            rows.push_back({st,
                            derivatives::close_position(pair.conc_short, params, expired, st).net_payoff,
                            derivatives::close_position(pair.aonp_short, params, expired, st).net_payoff});
        }
    } else if (name == "straddle") {
        derivatives::StraddleQuote q{};
        if (v.has("x")) {
            q = derivatives::compose_straddle(params, state, v.real("x"));
        } else if (v.has("m-call") || v.has("m-put")) {
            q = derivatives::compose_skewed_straddle(params, state, v.real_or("m-call", 0.0),
                                                     v.real_or("m-put", 0.0));
        } else {
            throw ValidationError("straddle needs --x or --m-call/--m-put");
        }
        f.emplace_back("lpt_value", format_decimal(q.lpt_value));
        f.emplace_back("call_cost_risky", format_decimal(q.call_cost_risky));
        f.emplace_back("put_cost_cash", format_decimal(q.put_cost_cash));
        f.emplace_back("denominator", format_decimal(q.denominator));
        f.emplace_back("m_call", format_decimal(q.m_call));
        f.emplace_back("m_put", format_decimal(q.m_put));
        f.emplace_back("total_cost_risky", format_decimal(q.total_cost_risky));
        columns.push_back("payoff");
        for (double st : grid) {
            rows.push_back({st, derivatives::straddle_terminal_payoff(q, K, st)});
        }
    } else if (name == "future") {
        const auto q = derivatives::compose_long_future(params, state);
        f.emplace_back("cc_risky", format_decimal(q.cc_risky));
        f.emplace_back("cc_stable", format_decimal(q.cc_stable));
        f.emplace_back("lpt_mark", format_decimal(q.lpt_mark));
        f.emplace_back("call_cost_risky", format_decimal(q.call_cost_risky));
        f.emplace_back("net_cost_risky", format_decimal(q.net_cost_risky));
        columns.push_back("terminal_value");
        columns.push_back("terminal_value_risky");
        for (double st : grid) {
            const double value = derivatives::long_future_terminal_value(params, expired, st);
            rows.push_back({st, value, value / st});
        }
    } else {
        throw ValidationError("unknown construction '" + name + "'");
    }

    print_fields(out, f);
    out << '\n';
    const io::CsvTable table{columns, rows};
    io::write_csv(out, table);
    if (v.has("out")) {
        const auto dir = output_dir(v);
        std::ostringstream csv;
        io::write_csv(csv, table);
        write_file(dir / ("construct_" + name + ".csv"), csv.str());
        if (!ledger.empty()) {
            std::ostringstream lines;
            derivatives::write_ledger(lines, ledger);
            write_file(dir / ("construct_" + name + ".jsonl"), lines.str());
        }
    }
}

// ---- hedge-surface --------------------------------------------------------

void cmd_hedge_surface(const Values& v, std::ostream& out) {
    const double p0 = v.real_or("P0", 1.0);
    const double sigma = v.real_or("sigma", 0.85);
    const double tau = v.real_or("tau", 8.0 / 12.0);
    const auto points = v.integer_or("points", 200);
    if (points < 2) {
        throw ValidationError("--points must be at least 2");
    }
    if (!(p0 > 0.0)) {
        throw ValidationError("--P0 must be positive");
    }
    const auto strikes =
        v.reals_or("strikes", {0.7 * p0, 0.8 * p0, 0.9 * p0, p0, 1.1 * p0, 1.2 * p0, 1.3 * p0});
    const auto dir = output_dir(v);

    auto run = [&](lending::HedgeKind kind, std::vector<double> ks) {
        auto grid = lending::default_grid(kind, p0, std::move(ks), sigma, tau);
        grid.price_points = static_cast<std::size_t>(points);
        return lending::strike_adjusted_requirement(kind, grid);
    };
    auto save = [&](const std::string& file, const io::CsvTable& table) {
        std::ostringstream csv;
        io::write_csv(csv, table);
        write_file(dir / file, csv.str());
    };

    out << "kind,strike,worst_price,max_quantity_ratio,flagged\n";
    for (const auto kind : {lending::HedgeKind::Put, lending::HedgeKind::Call}) {
        const std::string tag = kind == lending::HedgeKind::Put ? "alpha" : "beta";
        save(tag + "_curve.csv", lending::surface_table(run(kind, {p0})));
        const auto surface = run(kind, strikes);
        save(tag + "_surface.csv", lending::surface_table(surface));
        save(tag + "_requirements.csv", lending::requirement_table(surface));
        for (const auto& r : surface.requirements) {
            out << tag << ',' << format_decimal(r.strike) << ','
                << (r.flagged ? "" : format_decimal(r.worst_price)) << ','
                << (r.flagged ? "" : format_decimal(r.max_ratio)) << ','
                << (r.flagged ? "true" : "false") << '\n';
        }
        if (surface.flagged_cells > 0) {
            spdlog::warn("{}: {} grid cells flagged (option value not positive)", tag,
                         surface.flagged_cells);
        }
    }
}

// ---- simulate-vault -------------------------------------------------------

struct SeedOutcome {
    vault::EpochReport report;
    bool rolled = false;  ///< false when the holdings could not seed the next pool
    std::vector<double> mispricing_loss;
    std::vector<double> swap_loss;
};

void cmd_simulate_vault(const Values& v, std::ostream& out) {
    const double K = v.real("K");
    const double sigma = v.real("sigma");
    const double t0 = v.real_or("t0", 0.0);
    double expiry = 0.0;
    if (v.has("T")) {
        expiry = v.real("T");
        if (v.has("horizon") && std::abs(v.real("horizon") - (expiry - t0)) >
                                    1e-12 * std::max(1.0, std::abs(expiry))) {
            throw ValidationError("--horizon conflicts with --T minus --t0");
        }
    } else if (v.has("horizon")) {
        expiry = t0 + v.real("horizon");
    } else {
        throw ValidationError("simulate-vault needs --T or --horizon");
    }
    if (!(expiry > t0)) {
        throw ValidationError("pool expiry must lie after the start time");
    }
    const double gamma = v.real_or("gamma", pool::kDefaultGamma);
    const pool::PoolParams params{K, sigma, expiry, gamma};
    params.validate();

    vault::GbmModel model;
    model.s0 = v.real_or("S0", K);
    model.mu = v.real_or("mu", 0.0);
    model.sigma = v.real_or("sigma-mkt", sigma);
    model.horizon = expiry - t0;
    model.steps = static_cast<std::size_t>(v.integer_or("steps", 512));
    model.start_time = t0;
    model.validate();

    std::vector<std::uint64_t> seeds;
    if (v.has("seeds")) {
        seeds = v.integers("seeds");
    } else {
        const auto first = v.integer_or("seed", 1);
        const auto count = v.integer_or("count", 1);
        if (count < 1) {
            throw ValidationError("--count must be at least 1");
        }
        for (std::uint64_t i = 0; i < count; ++i) {
            seeds.push_back(first + i);
        }
    }

    const double liquidity = v.real_or("liquidity", 1.0);
    const double roll_fraction = v.real_or("roll-fraction", 0.5);
    if (!(roll_fraction > 0.0 && roll_fraction < 1.0)) {
        throw ValidationError("--roll-fraction must lie in (0, 1)");
    }
    const auto roll_index = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(roll_fraction * static_cast<double>(model.steps))), 1,
        model.steps > 1 ? model.steps - 1 : 1);
    if (model.steps < 2) {
        throw ValidationError("--steps must be at least 2 for the rollover comparison");
    }
    const vault::SlippageModel slippage{v.real_or("depth", K), v.real_or("impact-exponent", 2.0)};
    slippage.validate();
    const auto scales = v.reals_or("scales", {1.0, 2.0, 10.0});
    for (double s : scales) {
        if (!(s > 0.0)) {
            throw ValidationError("--scales must be positive");
        }
    }
    const auto unit = pool::initialize(params, t0, model.s0, liquidity);
    const vault::Holdings start{unit.total_risky(), unit.total_stable()};
    const bool has_next_k = v.has("next-K");
    const double next_k = v.real_or("next-K", 0.0);

    auto simulate = [&](std::uint64_t seed) {
        const auto path = vault::simulate_gbm(model, seed);
        const auto vault0 = vault::make_vault(start, model.s0);
        SeedOutcome o{vault::run_epoch(vault0, params, path, gamma).report, false, {}, {}};

        const auto partial = vault::run_epoch(vault0, params, path, gamma, roll_index);
        const auto held = vault::withdraw(partial.vault).holdings;
        const double t_roll = path.times[roll_index];
        const double m = path.prices[roll_index];
        const pool::PoolParams next{has_next_k ? next_k : m, sigma, t_roll + (expiry - t0), gamma};
        try {
            for (double s : scales) {
                const auto scaled = vault::make_vault({held.risky * s, held.stable * s}, m);
                o.mispricing_loss.push_back(vault::rollover_mispricing(scaled, next, t_roll, m).loss);
                o.swap_loss.push_back(vault::rollover_swap(scaled, next, t_roll, m, slippage).loss);
            }
            o.rolled = true;
        } catch (const LiquidityBoundError& e) {
            // e.g. a drained stable leg leaves a one-sided vault
            spdlog::warn("seed {}: rollover skipped: {}", seed, e.what());
            o.mispricing_loss.clear();
            o.swap_loss.clear();
        }
        return o;
    };

    // Seeds are independent; results land in seed order whatever the schedule.
    std::vector<SeedOutcome> outcomes(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const auto hw = std::max(1u, std::thread::hardware_concurrency());
    const auto n_threads = std::min<std::size_t>(v.integer_or("threads", hw), seeds.size());
    std::atomic<std::size_t> next_index{0};
    auto worker = [&] {
        for (std::size_t i = next_index++; i < seeds.size(); i = next_index++) {
            try {
                outcomes[i] = simulate(seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    std::ostringstream lines;
    double fees = 0.0;
    double gap = 0.0;
    std::vector<double> mis(scales.size(), 0.0);
    std::vector<double> swp(scales.size(), 0.0);
    std::size_t rolled = 0;
    for (const auto& o : outcomes) {
        lines << vault::to_json_line(o.report) << '\n';
        fees += o.report.fees;
        gap += o.report.replication_gap;
        if (!o.rolled) {
            continue;
        }
        ++rolled;
        for (std::size_t j = 0; j < scales.size(); ++j) {
            mis[j] += o.mispricing_loss[j];
            swp[j] += o.swap_loss[j];
        }
    }
    const auto n = static_cast<double>(outcomes.size());
    json summary;
    summary["summary"] = true;
    summary["seeds"] = outcomes.size();
    summary["gamma"] = detail::decimal(gamma);
    summary["mean_fees"] = detail::decimal(fees / n);
    summary["mean_replication_gap"] = detail::decimal(gap / n);
    summary["roll_time"] = detail::decimal(t0 + (expiry - t0) * static_cast<double>(roll_index) /
                                                    static_cast<double>(model.steps));
    summary["rollover_seeds"] = rolled;
    json table = json::array();
    json crossover = nullptr;
    const auto r = static_cast<double>(rolled);
    for (std::size_t j = 0; rolled > 0 && j < scales.size(); ++j) {
        table.push_back({{"liquidity", detail::decimal(scales[j])},
                         {"mispricing_loss", detail::decimal(mis[j] / r)},
                         {"swap_loss", detail::decimal(swp[j] / r)},
                         {"mispricing_loss_per_liquidity", detail::decimal(mis[j] / r / scales[j])},
                         {"swap_loss_per_liquidity", detail::decimal(swp[j] / r / scales[j])}});
        if (crossover.is_null() && swp[j] > mis[j]) {
            crossover = detail::decimal(scales[j]);
        }
    }
    summary["rollover"] = std::move(table);
    summary["swap_exceeds_mispricing_from"] = crossover;
    lines << summary.dump() << '\n';

    out << lines.str();
    if (v.has("out")) {
        write_file(output_dir(v) / "vault_report.jsonl", lines.str());
    }
}

void setup_logging() {
    auto logger = spdlog::get("rmm_lab");
    if (!logger) {
        logger = spdlog::stderr_color_mt("rmm_lab");
    }
    spdlog::set_default_logger(logger);
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("RMM_LAB_LOG")) {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    setup_logging();

    CLI::App app{"Replicating market maker lab: pricing, constructions, hedges, vaults"};
    app.name("rmm_lab");
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its keys");

    const std::vector<std::string> globals{"out", "seed"};
    std::map<std::string, std::string> bound;
    std::map<std::string, CLI::Option*> options;
    for (const auto& key : globals) {
        options[key] = app.add_option("--" + key, bound[key]);
    }
    options["out"]->description("output directory");
    options["seed"]->description("first random seed");

    struct Command {
        CLI::App* app;
        std::vector<std::string> keys;
    };
    std::map<std::string, Command> commands;
    auto add_command = [&](const std::string& name, const std::string& help,
                           std::vector<std::string> keys) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        for (const auto& key : keys) {
            options[name + "/" + key] = sub->add_option("--" + key, bound[name + "/" + key]);
        }
        commands[name] = {sub, std::move(keys)};
        return sub;
    };

    add_command("price", "Black-Scholes and LPT values at one point", {"S", "K", "sigma", "tau", "k"});
    auto* construct = add_command(
        "construct", "open a construction on a fresh pool and tabulate its terminal payoff",
        {"S", "K", "sigma", "tau", "t", "gamma", "L", "qty", "counterparty-qty", "rate", "x",
         "m-call", "m-put", "grid-lo", "grid-hi", "grid-points"});
    std::string construction;
    construct
        ->add_option("name", construction, "construction")
        ->required()
        ->check(CLI::IsMember(
            {"long-call", "long-put", "split-binaries", "short-binary", "straddle", "future"}));
    add_command("hedge-surface", "hedge ratio curves and strike-adjusted requirement surfaces",
                {"P0", "sigma", "tau", "strikes", "points"});
    add_command("simulate-vault", "theta vault epochs over GBM paths, one JSON line per seed",
                {"K", "sigma", "T", "t0", "S0", "mu", "sigma-mkt", "horizon", "steps", "gamma",
                 "seeds", "count", "liquidity", "roll-fraction", "next-K", "depth",
                 "impact-exponent", "scales", "threads"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        std::string name;
        for (const auto& [n, c] : commands) {
            if (c.app->parsed()) {
                name = n;
            }
        }
        const auto& cmd = commands.at(name);
        Values values;
        for (const auto& key : globals) {
            if (options[key]->count() > 0) {
                values.raw[key] = bound[key];
            }
        }
        for (const auto& key : cmd.keys) {
            if (options[name + "/" + key]->count() > 0) {
                values.raw[key] = bound[name + "/" + key];
            }
        }
        if (!config_path.empty()) {
            auto keys = cmd.keys;
            keys.insert(keys.end(), globals.begin(), globals.end());
            merge_config(values, config_path, keys);
        }

        if (name == "price") {
            cmd_price(values, out);
        } else if (name == "construct") {
            cmd_construct(construction, values, out);
        } else if (name == "hedge-surface") {
            cmd_hedge_surface(values, out);
        } else {
            cmd_simulate_vault(values, out);
        }
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace rmm::cli
