#include "panelgwas/kernel.hpp"

#include "panelgwas/stats.hpp"

#include <algorithm>

namespace panelgwas {

namespace {

constexpr std::size_t kRows = 12;                             // markers per register tile
constexpr std::size_t kWidth = PackedPhenotypes::kPanelWidth;  // phenotypes per register tile
constexpr std::size_t kDepth = 128;                            // samples per cache block
constexpr std::size_t kPanelsPerBlock = 32;

#if defined(__GNUC__)
typedef double v8d __attribute__((vector_size(64)));
typedef double v8du __attribute__((vector_size(64), aligned(8), may_alias));
static_assert(kWidth == 16);

// c[r][0..16) = (first ? 0 : c[r][0..16)) + sum_k a[k][r] * b[k][0..16), k ascending.
inline void tile_kernel(const double* a, const double* b, std::size_t depth, double* c, std::size_t ldc, bool first) {
  v8d acc[kRows][2];
  for (std::size_t r = 0; r < kRows; ++r) {
    if (first) {
      acc[r][0] = v8d{};
      acc[r][1] = v8d{};
    } else {
      acc[r][0] = *reinterpret_cast<const v8du*>(c + r * ldc);
      acc[r][1] = *reinterpret_cast<const v8du*>(c + r * ldc + 8);
    }
  }
  for (std::size_t k = 0; k < depth; ++k) {
    const v8d b0 = *reinterpret_cast<const v8du*>(b + k * kWidth);
    const v8d b1 = *reinterpret_cast<const v8du*>(b + k * kWidth + 8);
    for (std::size_t r = 0; r < kRows; ++r) {
      const double s = a[k * kRows + r];
      const v8d sv = {s, s, s, s, s, s, s, s};
      acc[r][0] += sv * b0;
      acc[r][1] += sv * b1;
    }
  }
  for (std::size_t r = 0; r < kRows; ++r) {
    *reinterpret_cast<v8du*>(c + r * ldc) = acc[r][0];
    *reinterpret_cast<v8du*>(c + r * ldc + 8) = acc[r][1];
  }
}
#else
inline void tile_kernel(const double* a, const double* b, std::size_t depth, double* c, std::size_t ldc, bool first) {
  double acc[kRows][kWidth];
  for (std::size_t r = 0; r < kRows; ++r)
    for (std::size_t j = 0; j < kWidth; ++j) acc[r][j] = first ? 0.0 : c[r * ldc + j];
  for (std::size_t k = 0; k < depth; ++k)
    for (std::size_t r = 0; r < kRows; ++r)
      for (std::size_t j = 0; j < kWidth; ++j) acc[r][j] += a[k * kRows + r] * b[k * kWidth + j];
  for (std::size_t r = 0; r < kRows; ++r)
    for (std::size_t j = 0; j < kWidth; ++j) c[r * ldc + j] = acc[r][j];
}
#endif

template <typename Scalar>
RowMatrixXd correlate_rows(const Scalar* g, std::size_t rows, std::size_t ldg, const PackedPhenotypes& y,
                           std::size_t* clamped) {
  const std::size_t n = y.n(), p = y.p();
  const std::size_t groups = (rows + kRows - 1) / kRows;
  const std::size_t padded_p = y.panels() * kWidth;
  const std::size_t full_groups = rows / kRows, full_panels = p / kWidth;
  RowMatrixXd r(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  if (n == 0) r.setZero();
  // Tiles that overhang the result accumulate in scratch: the partial last row group, and the
  // partial last phenotype panel of every full row group.
  std::vector<double> tail_rows(full_groups < groups ? kRows * padded_p : 0);
  std::vector<double> tail_cols(full_panels < y.panels() ? full_groups * kRows * kWidth : 0);
  auto target = [&](std::size_t grp, std::size_t j, std::size_t& ldc) -> double* {
    if (grp == full_groups) {
      ldc = padded_p;
      return tail_rows.data() + j * kWidth;
    }
    if (j == full_panels) {
      ldc = kWidth;
      return tail_cols.data() + grp * kRows * kWidth;
    }
    ldc = p;
    return r.data() + grp * kRows * p + j * kWidth;
  };
  std::vector<double> packed(groups * kRows * kDepth);

  for (std::size_t k0 = 0; k0 < n; k0 += kDepth) {
    const std::size_t depth = std::min(kDepth, n - k0);
    for (std::size_t grp = 0; grp < groups; ++grp) {
      double* dst = packed.data() + grp * kRows * depth;
      for (std::size_t row_in = 0; row_in < kRows; ++row_in) {
        const std::size_t row = grp * kRows + row_in;
        if (row < rows) {
          const Scalar* src = g + row * ldg + k0;
          for (std::size_t k = 0; k < depth; ++k) dst[k * kRows + row_in] = static_cast<double>(src[k]);
        } else {
          for (std::size_t k = 0; k < depth; ++k) dst[k * kRows + row_in] = 0.0;
        }
      }
    }
    for (std::size_t j0 = 0; j0 < y.panels(); j0 += kPanelsPerBlock) {
      const std::size_t j1 = std::min(y.panels(), j0 + kPanelsPerBlock);
      for (std::size_t grp = 0; grp < groups; ++grp) {
        const double* a = packed.data() + grp * kRows * depth;
        for (std::size_t j = j0; j < j1; ++j) {
          std::size_t ldc = 0;
          double* c = target(grp, j, ldc);
          tile_kernel(a, y.panel(j) + k0 * kWidth, depth, c, ldc, k0 == 0);
        }
      }
    }
  }

  if (n > 0) {
    for (std::size_t i = full_groups * kRows; i < rows; ++i)
      std::copy_n(tail_rows.data() + (i - full_groups * kRows) * padded_p, p, r.data() + i * p);
    const std::size_t tail_width = p - full_panels * kWidth;
    for (std::size_t i = 0; tail_width > 0 && i < full_groups * kRows; ++i)
      std::copy_n(tail_cols.data() + i * kWidth, tail_width, r.data() + i * p + full_panels * kWidth);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  std::size_t clamp_events = 0;
  double* v = r.data();
  for (std::size_t idx = 0, total = rows * p; n > 0 && idx < total; ++idx) {
    double x = v[idx] * inv_n;
    if (x > 1.0) {
      x = 1.0;
      ++clamp_events;
    } else if (x < -1.0) {
      x = -1.0;
      ++clamp_events;
    }
    v[idx] = x;
  }
  if (clamped) *clamped += clamp_events;
  return r;
}

}  // namespace

PackedPhenotypes::PackedPhenotypes(const Eigen::MatrixXd& y_tilde)
    : n_(static_cast<std::size_t>(y_tilde.rows())),
      p_(static_cast<std::size_t>(y_tilde.cols())),
      panels_((p_ + kPanelWidth - 1) / kPanelWidth),
      data_(panels_ * n_ * kPanelWidth, 0.0) {
  for (std::size_t j = 0; j < panels_; ++j) {
    double* dst = data_.data() + j * n_ * kPanelWidth;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t c = 0; c < kPanelWidth; ++c) {
        const std::size_t col = j * kPanelWidth + c;
        dst[i * kPanelWidth + c] =
            col < p_ ? y_tilde(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) : 0.0;
      }
  }
}

RowMatrixXd correlate(const StandardizedBatch& g, const PackedPhenotypes& y, std::size_t* clamped) {
  if (g.cols() != y.n())
    throw Error("correlate: genotype batch has " + std::to_string(g.cols()) + " samples, phenotypes have " +
                std::to_string(y.n()));
  if (g.precision == Precision::F64)
    return correlate_rows(g.g64.data(), g.rows(), static_cast<std::size_t>(g.g64.cols()), y, clamped);
  return correlate_rows(g.g32.data(), g.rows(), static_cast<std::size_t>(g.g32.cols()), y, clamped);
}

RowMatrixXd correlate(const RowMatrixXd& g, const Eigen::MatrixXd& y, std::size_t* clamped) {
  if (g.cols() != y.rows())
    throw Error("correlate: inner dimension mismatch (" + std::to_string(g.cols()) + " vs " +
                std::to_string(y.rows()) + ")");
  const PackedPhenotypes packed(y);
  return correlate_rows(g.data(), static_cast<std::size_t>(g.rows()), static_cast<std::size_t>(g.cols()), packed,
                        clamped);
}

StatBlock compute_stat_block(RowMatrixXd R, double df) {
  StatBlock s;
  s.df = df;
  s.T.resize(R.rows(), R.cols());
  s.P.resize(R.rows(), R.cols());
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      const double t = t_from_r(R(i, j), df);
      s.T(i, j) = t;
      s.P(i, j) = p_from_t(t, df, &s.p_underflow);
    }
  s.R = std::move(R);
  return s;
}

}  // namespace panelgwas
