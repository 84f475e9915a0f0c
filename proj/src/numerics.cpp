#include "rmm/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rmm/error.hpp"

namespace rmm::numerics {

namespace {

constexpr double kSqrt2Pi = 2.506628274631000502415765284811;

void require_finite(double x, const char* where) {
    if (!std::isfinite(x)) {
        throw DomainError(std::string(where) + ": non-finite input");
    }
}

// Acklam's rational approximation, |relative error| < 1.15e-9. Only used as
// the starting point for the Halley polish below.
double acklam_guess(double p) {
    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Solves Φ(x) = p for p in (0, 0.5].
double lower_tail_quantile(double p) {
    double x = acklam_guess(p);
    for (int i = 0; i < 3; ++i) {
        const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
        if (e == 0.0) {
            break;
        }
        const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
        if (!std::isfinite(u)) {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

}  // namespace

void Tolerance::validate() const {
    if (!(abs_tol >= 0.0) || !(rel_tol >= 0.0)) {
        throw DomainError("Tolerance: negative tolerance");
    }
    if (abs_tol == 0.0 && rel_tol == 0.0) {
        throw DomainError("Tolerance: abs_tol and rel_tol are both zero");
    }
    if (max_iter <= 0) {
        throw DomainError("Tolerance: max_iter must be positive");
    }
}

double std_normal_cdf(double x) {
    require_finite(x, "std_normal_cdf");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_pdf(double x) {
    require_finite(x, "std_normal_pdf");
    return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

double std_normal_inv_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("std_normal_inv_cdf: probability must lie strictly inside (0,1)");
    }
    if (p <= 0.5) {
        return lower_tail_quantile(p);
    }
    // 1 - p is exact for p in [0.5, 1).
    return -lower_tail_quantile(1.0 - p);
}

Maximum find_max_1d(const std::function<double(double)>& f, double lo, double hi,
                    const Tolerance& tol, std::size_t grid_points) {
    tol.validate();
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw DomainError("find_max_1d: need finite lo < hi");
    }
    if (grid_points < 3) {
        throw DomainError("find_max_1d: grid needs at least 3 points");
    }

    auto eval = [&f](double x) {
        const double y = f(x);
        if (!std::isfinite(y)) {
            throw NumericError("find_max_1d: non-finite objective", x);
        }
        return y;
    };

    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    std::size_t best = 0;
    double best_x = lo;
    double best_y = eval(lo);
    for (std::size_t i = 1; i < grid_points; ++i) {
        const double x = (i + 1 == grid_points) ? hi : lo + step * static_cast<double>(i);
        const double y = eval(x);
        if (y > best_y) {
            best = i;
            best_x = x;
            best_y = y;
        }
    }

    double a = best == 0 ? lo : lo + step * static_cast<double>(best - 1);
    double b = best + 1 >= grid_points ? hi : lo + step * static_cast<double>(best + 1);

    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < tol.max_iter; ++it) {
        const double width = b - a;
        const double scale = std::max(std::abs(a), std::abs(b));
        if (width <= std::max(tol.abs_tol, tol.rel_tol * scale)) {
            break;
        }
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }

    Maximum out{best_x, best_y};
    if (fc > out.value) {
        out = {c, fc};
    }
    if (fd > out.value) {
        out = {d, fd};
    }
    return out;
}

}  // namespace rmm::numerics
