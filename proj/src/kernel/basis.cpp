#include "panelgwas/kernel.hpp"

namespace panelgwas {

CovariateBasis build_covariate_basis(const Eigen::MatrixXd& covariates, const std::vector<std::string>& names,
                                     bool include_intercept, double rank_tolerance) {
  const Eigen::Index n = covariates.rows();
  if (!names.empty() && names.size() != static_cast<std::size_t>(covariates.cols()))
    throw Error("build_covariate_basis: name count does not match covariate columns");
  if (covariates.hasNaN()) throw Error("build_covariate_basis: covariates contain missing values");

  std::vector<Eigen::VectorXd> candidates;
  std::vector<std::string> labels;
  if (include_intercept) {
    candidates.push_back(Eigen::VectorXd::Ones(n));
    labels.emplace_back("intercept");
  }
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    candidates.push_back(covariates.col(j));
    labels.push_back(names.empty() ? "covar" + std::to_string(j + 1) : names[static_cast<std::size_t>(j)]);
  }

  CovariateBasis basis;
  std::vector<Eigen::VectorXd> kept;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    Eigen::VectorXd v = candidates[c];
    const double norm0 = v.norm();
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : kept) v -= q.dot(v) * q;
    const double norm = v.norm();
    if (norm <= rank_tolerance * norm0) continue;
    kept.push_back(v / norm);
    basis.source_columns.push_back(labels[c]);
  }

  const auto q = static_cast<Eigen::Index>(kept.size());
  if (n < q + 2)
    throw Error("covariate basis of rank " + std::to_string(q) + " leaves no residual degrees of freedom with N=" +
                std::to_string(n));
  basis.Q.resize(n, q);
  for (Eigen::Index j = 0; j < q; ++j) basis.Q.col(j) = kept[static_cast<std::size_t>(j)];
  return basis;
}

Eigen::MatrixXd residualize(const Eigen::MatrixXd& Y, const CovariateBasis& basis) {
  if (Y.rows() != basis.Q.rows())
    throw Error("residualize: phenotype rows (" + std::to_string(Y.rows()) + ") != basis rows (" +
                std::to_string(basis.Q.rows()) + ")");
  Eigen::MatrixXd centered = Y.rowwise() - Y.colwise().mean();
  if (basis.rank() == 0) return centered;
  const Eigen::MatrixXd coef = basis.Q.transpose() * centered;
  centered.noalias() -= basis.Q * coef;
  return centered;
}

StandardizedColumns standardize_columns(const Eigen::MatrixXd& Y, std::span<const double> reference_means) {
  if (!reference_means.empty() && reference_means.size() != static_cast<std::size_t>(Y.cols()))
    throw Error("standardize_columns: reference means do not match column count");
  const auto n = static_cast<double>(Y.rows());
  StandardizedColumns out;
  out.values.resize(Y.rows(), Y.cols());
  out.sd.resize(Y.cols());
  out.zero_variance.assign(static_cast<std::size_t>(Y.cols()), false);
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const double mean = Y.col(j).mean();
    auto col = out.values.col(j);
    col = Y.col(j).array() - mean;
    const double sd = std::sqrt(col.squaredNorm() / n);
    out.sd(j) = sd;
    const double ref = reference_means.empty() ? mean : reference_means[static_cast<std::size_t>(j)];
    if (!(sd > 1e-12 * std::max(1.0, std::fabs(ref)))) {
      out.zero_variance[static_cast<std::size_t>(j)] = true;
      col.setZero();
      continue;
    }
    col /= sd;
  }
  return out;
}

}  // namespace panelgwas
