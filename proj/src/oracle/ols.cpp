#include "panelgwas/oracle.hpp"

#include "panelgwas/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace panelgwas::oracle {

namespace {

// Inverts a k x k row-major matrix in place by Gauss-Jordan elimination with complete pivoting.
void invert_in_place(std::vector<double>& a, std::size_t k) {
  std::vector<std::size_t> row_perm(k), col_perm(k);
  std::iota(row_perm.begin(), row_perm.end(), 0);
  std::iota(col_perm.begin(), col_perm.end(), 0);
  double scale = 0.0;
  for (std::size_t i = 0; i < k; ++i) scale = std::max(scale, std::fabs(a[i * k + i]));
  std::vector<bool> used_row(k, false), used_col(k, false);
  std::vector<std::size_t> piv_row(k), piv_col(k);

  for (std::size_t step = 0; step < k; ++step) {
    double best = -1.0;
    std::size_t br = 0, bc = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (used_row[i]) continue;
      for (std::size_t j = 0; j < k; ++j) {
        if (used_col[j]) continue;
        if (std::fabs(a[i * k + j]) > best) {
          best = std::fabs(a[i * k + j]);
          br = i;
          bc = j;
        }
      }
    }
    if (!(best > 1e-12 * scale)) throw Error("ols_single: rank-deficient design matrix");
    // Standard in-place Gauss-Jordan: swap the pivot onto the diagonal, then eliminate.
    if (br != bc)
      for (std::size_t j = 0; j < k; ++j) std::swap(a[br * k + j], a[bc * k + j]);
    used_row[bc] = used_col[bc] = true;
    piv_row[step] = br;
    piv_col[step] = bc;
    const double inv = 1.0 / a[bc * k + bc];
    a[bc * k + bc] = 1.0;
    for (std::size_t j = 0; j < k; ++j) a[bc * k + j] *= inv;
    for (std::size_t i = 0; i < k; ++i) {
      if (i == bc) continue;
      const double f = a[i * k + bc];
      a[i * k + bc] = 0.0;
      for (std::size_t j = 0; j < k; ++j) a[i * k + j] -= f * a[bc * k + j];
    }
  }
  for (std::size_t step = k; step-- > 0;) {
    if (piv_row[step] != piv_col[step])
      for (std::size_t i = 0; i < k; ++i) std::swap(a[i * k + piv_row[step]], a[i * k + piv_col[step]]);
  }
}

OlsResult fit(std::span<const double> y, std::span<const double> g, CovariateView cov, double df_override) {
  const std::size_t n = y.size();
  if (g.size() != n) throw Error("ols_single: y and g lengths differ");
  const std::size_t c = cov.cols;
  if (cov.values.size() != n * c) throw Error("ols_single: covariate matrix has the wrong size");
  const std::size_t k = c + 2;
  if (n <= k) throw Error("ols_single: need more samples than regression terms");

  // Design columns: 0 = intercept, 1..c = covariates, c+1 = genotype.
  auto x = [&](std::size_t i, std::size_t j) -> double {
    if (j == 0) return 1.0;
    if (j <= c) return cov.values[i * c + (j - 1)];
    return g[i];
  };
  std::vector<double> xtx(k * k, 0.0), xty(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      const double xa = x(i, a);
      xty[a] += xa * y[i];
      for (std::size_t b = a; b < k; ++b) xtx[a * k + b] += xa * x(i, b);
    }
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < a; ++b) xtx[a * k + b] = xtx[b * k + a];

  invert_in_place(xtx, k);
  std::vector<double> beta(k, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) beta[a] += xtx[a * k + b] * xty[b];

  double rss = 0.0, ymean = 0.0;
  for (std::size_t i = 0; i < n; ++i) ymean += y[i];
  ymean /= static_cast<double>(n);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fitted = 0.0;
    for (std::size_t a = 0; a < k; ++a) fitted += x(i, a) * beta[a];
    rss += (y[i] - fitted) * (y[i] - fitted);
    tss += (y[i] - ymean) * (y[i] - ymean);
  }

  OlsResult r;
  r.df = df_override > 0 ? df_override : static_cast<double>(n - k);
  r.beta = beta[k - 1];
  if (rss <= 1e-20 * std::max(1.0, tss)) {
    r.se = 0.0;
    r.t = r.beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.beta);
  } else {
    r.se = std::sqrt(rss / r.df * xtx[(k - 1) * k + (k - 1)]);
    r.t = r.beta / r.se;
  }
  r.p = p_from_t(r.t, r.df);
  return r;
}

}  // namespace

OlsResult ols_single(std::span<const double> y, std::span<const double> g, CovariateView covariates) {
  return fit(y, g, covariates, 0.0);
}

OlsResult ols_single_with_df(std::span<const double> y, std::span<const double> g, CovariateView covariates,
                             double df) {
  if (!(df >= 1.0)) throw Error("ols_single_with_df: df must be at least 1");
  return fit(y, g, covariates, df);
}

}  // namespace panelgwas::oracle
