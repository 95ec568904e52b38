#include "panelgwas/kernel.hpp"

namespace panelgwas {

const char* to_string(SkipReason r) {
  switch (r) {
    case SkipReason::None: return "NONE";
    case SkipReason::Monomorphic: return "MONOMORPHIC";
    case SkipReason::AllMissing: return "ALL_MISSING";
    case SkipReason::Collinear: return "COLLINEAR";
  }
  return "?";
}

StandardizedBatch prepare_genotype_batch(const RawBatch& raw, const CovariateBasis* basis,
                                         bool residualize_genotypes, Precision precision) {
  const auto m_rows = raw.dosages.rows();
  const auto n = raw.dosages.cols();
  if (residualize_genotypes && (!basis || basis->Q.rows() != n))
    throw Error("prepare_genotype_batch: genotype residualization needs a basis with " + std::to_string(n) + " rows");

  StandardizedBatch out;
  out.precision = precision;
  out.qc.resize(static_cast<std::size_t>(m_rows));
  if (precision == Precision::F64)
    out.g64.setZero(m_rows, n);
  else
    out.g32.setZero(m_rows, n);

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd row(n);
  for (Eigen::Index m = 0; m < m_rows; ++m) {
    auto& qc = out.qc[static_cast<std::size_t>(m)];
    const double* src = raw.dosages.row(m).data();
    double sum = 0.0;
    std::size_t present = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!is_missing(src[i])) {
        sum += src[i];
        ++present;
      }
    qc.missing_count = static_cast<std::size_t>(n) - present;
    if (present == 0) {
      qc.skip = SkipReason::AllMissing;
      qc.allele_frequency = kMissing;
      continue;
    }
    const double mean = sum / static_cast<double>(present);
    qc.allele_frequency = mean / 2.0;
    for (Eigen::Index i = 0; i < n; ++i) row(i) = is_missing(src[i]) ? 0.0 : src[i] - mean;
    double var = row.squaredNorm() * inv_n;
    qc.variance_before_scaling = var;
    if (var <= 1e-12) {
      qc.skip = SkipReason::Monomorphic;
      continue;
    }
    if (residualize_genotypes) {
      row -= basis->Q * (basis->Q.transpose() * row);
      const double var_res = row.squaredNorm() * inv_n;
      if (var_res <= 1e-12 * std::max(1.0, var)) {
        qc.skip = SkipReason::Collinear;
        continue;
      }
      var = var_res;
    }
    row /= std::sqrt(var);
    if (precision == Precision::F64)
      out.g64.row(m) = row.transpose();
    else
      out.g32.row(m) = row.transpose().cast<float>();
  }
  return out;
}

}  // namespace panelgwas
