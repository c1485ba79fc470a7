#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "ice/error.hpp"

namespace ice {

/// Pearson chi-squared statistic of a 2 x p contingency table given as a
/// row-major count array. Expected frequencies come from the marginals;
/// cells whose expected count is zero (possible only when a whole row is
/// empty) contribute nothing, so a one-sided or single-column table scores 0.
inline double chi_squared_stat(std::span<const std::int64_t> table, std::size_t p) {
    detail::require(p >= 1 && table.size() == 2 * p, "chi_squared_stat: bad table shape");
    std::int64_t row0 = 0, row1 = 0;
    for (std::size_t l = 0; l < p; ++l) row0 += table[l];
    for (std::size_t l = 0; l < p; ++l) row1 += table[p + l];
    const std::int64_t total = row0 + row1;
    detail::require(total >= 1, "chi_squared_stat: empty table");
    if (row0 == 0 || row1 == 0 || p == 1) return 0.0;

    const double inv_total = 1.0 / static_cast<double>(total);
    double stat = 0.0;
    for (std::size_t l = 0; l < p; ++l) {
        const auto col = static_cast<double>(table[l] + table[p + l]);
        if (col == 0.0) continue; // zero expected count contributes nothing
        const double e0 = static_cast<double>(row0) * col * inv_total;
        const double e1 = static_cast<double>(row1) * col * inv_total;
        const double d0 = static_cast<double>(table[l]) - e0;
        const double d1 = static_cast<double>(table[p + l]) - e1;
        stat += d0 * d0 / e0 + d1 * d1 / e1;
    }
    return stat;
}

namespace detail {

// Lower regularized incomplete gamma P(a, z) by power series, returned as a
// probability (not log). Converges fast for z < a + 1, where P is bounded
// away from 1, so the caller's log1p(-P) keeps full relative precision in Q.
inline double gamma_p_series(double a, double z) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return std::exp(a * std::log(z) - z - std::lgamma(a) + std::log(sum));
}

// log of the continued fraction part of Q(a, z) (modified Lentz), valid for
// z >= a + 1. Q(a, z) = exp(a*log z - z - lgamma(a)) * cf.
inline double gamma_q_log_cf(double a, double z) {
    constexpr double tiny = 1e-300;
    double b = z + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 20000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) <= 1e-16) break;
    }
    return a * std::log(z) - z - std::lgamma(a) + std::log(h);
}

} // namespace detail

/// Natural log of the chi-squared upper tail P(X > x) with dof degrees of
/// freedom, i.e. log of the regularized upper incomplete gamma Q(dof/2, x/2).
/// Evaluated in log space (series below the a+1 knee, continued fraction
/// above) so deep tails keep relative precision instead of underflowing.
inline double chi_sq_log_sf(double x, std::int64_t dof) {
    detail::require_input(dof >= 1, "chi_sq_log_sf: dof must be >= 1");
    detail::require_input(x >= 0.0 && std::isfinite(x),
                          "chi_sq_log_sf: x must be finite and >= 0");
    if (x == 0.0) return 0.0;
    const double a = 0.5 * static_cast<double>(dof);
    const double z = 0.5 * x;
    if (z < a + 1.0) return std::log1p(-detail::gamma_p_series(a, z));
    const double log_q = detail::gamma_q_log_cf(a, z);
    return log_q < 0.0 ? log_q : 0.0;
}

} // namespace ice
