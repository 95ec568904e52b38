#include "panelgwas/stats.hpp"

#include "panelgwas/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace panelgwas {

namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

// lgamma(x) - [(x - 1/2) log x - x + log sqrt(2 pi)] for x >= 10 (Stirling series).
double lgamma_correction(double x) {
  const double x2 = 1.0 / (x * x);
  constexpr double c[] = {1.0 / 12.0,          -1.0 / 360.0,   1.0 / 1260.0,
                          -1.0 / 1680.0,       1.0 / 1188.0,   -691.0 / 360360.0,
                          1.0 / 156.0,         -3617.0 / 122400.0};
  double s = c[7];
  for (int k = 6; k >= 0; --k) s = c[k] + s * x2;
  return s / x;
}

// Continued fraction for I_x(a, b) (modified Lentz); converges fast for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  constexpr int max_iter = 1'000'000;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw std::logic_error("reg_inc_beta: continued fraction did not converge (a=" + std::to_string(a) +
                         ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
}

// log I_x(a, b) evaluated on the branch where the continued fraction converges directly.
// log_x may be supplied separately when x itself underflows.
double log_ibeta_direct(double a, double b, double x, double y, double log_x) {
  const double log_front = a * log_x + b * std::log(y) - log_beta(a, b) - std::log(a);
  return log_front + std::log(beta_continued_fraction(a, b, x));
}

double log_ibeta_direct(double a, double b, double x, double y) {
  return log_ibeta_direct(a, b, x, y, std::log(x));
}

}  // namespace

double log_beta(double a, double b) {
  const double p = std::min(a, b), q = std::max(a, b);
  if (p >= 10.0) {
    const double corr = lgamma_correction(p) + lgamma_correction(q) - lgamma_correction(p + q);
    return -0.5 * std::log(q) + kLnSqrt2Pi + corr + (p - 0.5) * std::log(p / (p + q)) +
           q * std::log1p(-p / (p + q));
  }
  if (q >= 10.0) {
    const double corr = lgamma_correction(q) - lgamma_correction(p + q);
    return std::lgamma(p) + corr + p - p * std::log(p + q) + (q - 0.5) * std::log1p(-p / (p + q));
  }
  return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
}

double reg_inc_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("reg_inc_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("reg_inc_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_ibeta_direct(a, b, x, y));
  return 1.0 - std::exp(log_ibeta_direct(b, a, y, x));
}

double reg_inc_beta(double a, double b, double x) {
  return reg_inc_beta(a, b, x, 1.0 - x);
}

double t_from_r(double r, double df) {
  if (std::isnan(r)) return r;
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  if (r <= -1.0) return -std::numeric_limits<double>::infinity();
  constexpr double max_abs_r = 1.0 - 1e-15;
  const double rc = std::clamp(r, -max_abs_r, max_abs_r);
  return rc * std::sqrt(df / ((1.0 - rc) * (1.0 + rc)));
}

double p_from_t(double t, double df, std::size_t* underflow) {
  if (std::isnan(t)) return t;
  if (t == 0.0) return 1.0;
  auto floored = [&] {
    if (underflow) ++*underflow;
    return kPFloor;
  };
  if (std::isinf(t)) return floored();
  // x = df / (df + t^2), y = 1 - x, both formed without cancellation; through u = df / t^2
  // when t^2 dominates so that huge |t| does not overflow.
  double x, y, log_x;
  if (t * t <= df) {
    const double t2 = t * t;
    x = df / (df + t2);
    y = t2 / (df + t2);
    log_x = std::log(x);
  } else {
    const double s = std::sqrt(df) / std::fabs(t);
    const double u = s * s;
    x = u / (1.0 + u);
    y = 1.0 / (1.0 + u);
    log_x = 2.0 * std::log(s) - std::log1p(u);
  }
  const double a = 0.5 * df, b = 0.5;
  double p;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double log_p = log_ibeta_direct(a, b, x, y, log_x);
    if (log_p < std::log(kPFloor)) return floored();
    p = std::exp(log_p);
  } else {
    p = 1.0 - std::exp(log_ibeta_direct(b, a, y, x));
  }
  if (p < kPFloor) return floored();
  return std::min(p, 1.0);
}

double critical_abs_r(double p_threshold, double df) {
  if (p_threshold >= 1.0) return 0.0;
  if (!(p_threshold > 0.0)) throw Error("critical_abs_r: threshold must be in (0, 1]");
  // Bisect on |r| in [0, 1): p_from_t(t_from_r(r)) is non-increasing in r.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (p_from_t(t_from_r(mid, df), df) <= p_threshold)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace panelgwas
