#pragma once

#include <cstddef>
#include <functional>

namespace rmm::numerics {

/// Convergence controls for iterative routines.
struct Tolerance {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_iter = 200;

    /// Throws DomainError unless both tolerances are non-negative, not both
    /// zero, and max_iter is positive.
    void validate() const;
};

/// Φ(x), evaluated through erfc. Max absolute error target 1e-14.
[[nodiscard]] double std_normal_cdf(double x);

/// φ(x) = exp(-x²/2)/√(2π).
[[nodiscard]] double std_normal_pdf(double x);

/// Φ⁻¹(p) for p strictly inside (0, 1).
///
/// A rational initial guess is polished with Halley steps on Φ. The lower
/// tail is always solved directly (upper-tail inputs are reflected), so the
/// residual is small in relative terms even for p near 0 or 1. Callers are
/// expected to clamp reserves before calling; p on or outside the boundary
/// throws DomainError.
[[nodiscard]] double std_normal_inv_cdf(double p);

struct Maximum {
    double argmax;
    double value;
};

/// Maximizes f over [lo, hi]: a uniform scan of `grid_points` abscissae
/// brackets the best cell, golden-section search refines inside it.
///
/// The returned value is never below the best scanned sample, so endpoint
/// maxima of monotone functions are reported exactly. Non-finite
/// evaluations throw NumericError carrying the offending abscissa.
[[nodiscard]] Maximum find_max_1d(const std::function<double(double)>& f, double lo, double hi,
                                  const Tolerance& tol = {}, std::size_t grid_points = 256);

}  // namespace rmm::numerics
