#pragma once

#include <cstddef>

namespace panelgwas {

// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
double reg_inc_beta(double a, double b, double x);

// Same, with the complement y = 1 - x supplied separately so callers that know it
// exactly (e.g. t-tests with x = df / (df + t^2)) do not lose digits forming it.
double reg_inc_beta(double a, double b, double x, double y);

// Natural log of the beta function, accurate for large arguments.
double log_beta(double a, double b);

// t = r * sqrt(df / (1 - r^2)). |r| == 1 maps to +/- infinity.
double t_from_r(double r, double df);

// Smallest value p_from_t reports; anything smaller is floored here.
inline constexpr double kPFloor = 2.2250738585072014e-308;  // DBL_MIN

// Two-sided Student-t p-value. Infinite |t| or p below kPFloor returns kPFloor and
// increments *underflow when given.
double p_from_t(double t, double df, std::size_t* underflow = nullptr);

// Smallest |r| whose two-sided p-value is <= p_threshold at the given df.
// Returns 0 when p_threshold >= 1.
double critical_abs_r(double p_threshold, double df);

}  // namespace panelgwas
