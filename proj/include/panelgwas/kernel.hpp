#pragma once

#include "panelgwas/common.hpp"
#include "panelgwas/genotype_io.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace panelgwas {

// Orthonormal basis Q (N x q) of the intercept plus covariate column space.
struct CovariateBasis {
  Eigen::MatrixXd Q;
  std::vector<std::string> source_columns;  // retained columns, "intercept" first when present

  std::size_t rank() const { return static_cast<std::size_t>(Q.cols()); }
  std::size_t n() const { return static_cast<std::size_t>(Q.rows()); }
};

// Modified Gram-Schmidt with one reorthogonalization pass. A column is dropped when its
// norm after projection is <= rank_tolerance times its original norm.
CovariateBasis build_covariate_basis(const Eigen::MatrixXd& covariates,
                                     const std::vector<std::string>& names = {},
                                     bool include_intercept = true, double rank_tolerance = 1e-8);

// (I - QQ^T)(Y - Ybar), computed without forming the N x N projector.
Eigen::MatrixXd residualize(const Eigen::MatrixXd& Y, const CovariateBasis& basis);

struct StandardizedColumns {
  Eigen::MatrixXd values;       // zero mean, unit 1/N variance; zero-filled where flagged
  Eigen::VectorXd sd;           // 1/N standard deviation before scaling
  std::vector<bool> zero_variance;
};

// reference_means, when given, holds each column's mean before any centering; it sets the
// scale for the zero-variance test sd <= 1e-12 * max(1, |mean|).
StandardizedColumns standardize_columns(const Eigen::MatrixXd& Y,
                                        std::span<const double> reference_means = {});

enum class Precision { F32StoreF64Acc, F64 };

enum class SkipReason { None, Monomorphic, AllMissing, Collinear };

const char* to_string(SkipReason r);

struct MarkerQc {
  double allele_frequency = 0.0;  // mean dosage / 2 of the counted allele
  std::size_t missing_count = 0;
  double variance_before_scaling = 0.0;
  SkipReason skip = SkipReason::None;
};

// Standardized genotype rows (markers x samples). Exactly one of g64/g32 is populated,
// depending on precision. Skipped rows are all zero.
struct StandardizedBatch {
  Precision precision = Precision::F64;
  RowMatrixXd g64;
  RowMatrixXf g32;
  std::vector<MarkerQc> qc;

  std::size_t rows() const { return qc.size(); }
  std::size_t cols() const {
    return static_cast<std::size_t>(precision == Precision::F64 ? g64.cols() : g32.cols());
  }
};

StandardizedBatch prepare_genotype_batch(const RawBatch& raw, const CovariateBasis* basis = nullptr,
                                         bool residualize_genotypes = false,
                                         Precision precision = Precision::F64);

// Standardized phenotypes repacked into fixed-width column panels for the correlation kernel.
// Build once per scan and share read-only.
class PackedPhenotypes {
 public:
  static constexpr std::size_t kPanelWidth = 16;

  explicit PackedPhenotypes(const Eigen::MatrixXd& y_tilde);

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  std::size_t panels() const { return panels_; }
  const double* panel(std::size_t j) const { return data_.data() + j * n_ * kPanelWidth; }

 private:
  std::size_t n_ = 0, p_ = 0, panels_ = 0;
  std::vector<double> data_;
};

// R = G~ Y~ / N with entries clamped to [-1, 1]. Each entry is accumulated in double,
// sequentially over samples, so results do not depend on how markers are batched.
RowMatrixXd correlate(const StandardizedBatch& g, const PackedPhenotypes& y, std::size_t* clamped = nullptr);
RowMatrixXd correlate(const RowMatrixXd& g, const Eigen::MatrixXd& y, std::size_t* clamped = nullptr);

// T and two-sided P for every entry of R.
struct StatBlock {
  RowMatrixXd R, T, P;
  double df = 0.0;
  std::size_t p_underflow = 0;
};

StatBlock compute_stat_block(RowMatrixXd R, double df);

}  // namespace panelgwas
