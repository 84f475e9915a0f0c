#include "rmm/blackscholes.hpp"

#include <algorithm>
#include <cmath>

#include "rmm/error.hpp"
#include "rmm/numerics.hpp"

namespace rmm::bs {

using numerics::std_normal_cdf;

namespace {

void require_spot(double spot) {
    if (!std::isfinite(spot) || !(spot > 0.0)) {
        throw DomainError("spot price must be positive and finite");
    }
}

}  // namespace

void OptionSpec::validate() const {
    if (!std::isfinite(strike) || !(strike > 0.0)) {
        throw DomainError("OptionSpec: strike must be positive");
    }
    if (!std::isfinite(sigma) || !(sigma > 0.0)) {
        throw DomainError("OptionSpec: sigma must be positive");
    }
    if (!std::isfinite(tau) || !(tau >= 0.0)) {
        throw DomainError("OptionSpec: tau must be non-negative");
    }
}

Moneyness d1_d2(double spot, const OptionSpec& spec) {
    spec.validate();
    require_spot(spot);
    if (spec.tau == 0.0) {
        throw ExpiryError("d1_d2: no time to expiry");
    }
    const double vol = spec.sigma * std::sqrt(spec.tau);
    const double d1 = (std::log(spot / spec.strike) + 0.5 * spec.sigma * spec.sigma * spec.tau) / vol;
    return {d1, d1 - vol};
}

double covered_call_value(double spot, const OptionSpec& spec) {
    spec.validate();
    require_spot(spot);
    if (spec.tau == 0.0) {
        return std::min(spot, spec.strike);
    }
    const auto [d1, d2] = d1_d2(spot, spec);
    return spot * std_normal_cdf(-d1) + spec.strike * std_normal_cdf(d2);
}

VanillaValues vanilla_values(double spot, const OptionSpec& spec) {
    spec.validate();
    require_spot(spot);
    const double K = spec.strike;
    if (spec.tau == 0.0) {
        const double call_cash = std::max(spot - K, 0.0);
        return {call_cash / spot, call_cash, std::max(K - spot, 0.0)};
    }
    const auto [d1, d2] = d1_d2(spot, spec);
    const double call_risky = std::max(std_normal_cdf(d1) - (K / spot) * std_normal_cdf(d2), 0.0);
    const double put_cash =
        std::max(K * std_normal_cdf(-d2) - spot * std_normal_cdf(-d1), 0.0);
    return {call_risky, spot * call_risky, put_cash};
}

BinaryValues binary_values(double spot, const OptionSpec& spec) {
    spec.validate();
    require_spot(spot);
    if (spec.tau == 0.0) {
        const bool above = spot >= spec.strike;
        return {above ? 1.0 : 0.0, above ? 0.0 : 1.0, above ? 0.0 : spot, above ? spot : 0.0};
    }
    const auto [d1, d2] = d1_d2(spot, spec);
    return {std_normal_cdf(d2), std_normal_cdf(-d2), spot * std_normal_cdf(-d1),
            spot * std_normal_cdf(d1)};
}

}  // namespace rmm::bs
