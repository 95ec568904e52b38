#pragma once

#include "panelgwas/common.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace panelgwas {

// A delimited table keyed by sample ID. Unparseable or missing cells are NaN.
struct Table {
  std::vector<std::string> ids;
  std::vector<std::string> column_names;
  Eigen::MatrixXd values;  // rows x columns
  std::vector<std::size_t> missing_count;

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return column_names.size(); }
  // Restrict to the named columns in the given order.
  Table select(const std::vector<std::string>& names) const;
};

// Cells equal to one of these tokens are missing.
bool is_missing_token(const std::string& cell);

Table load_table(const std::filesystem::path& path, const std::string& id_column = "IID",
                 char delimiter = '\t');

struct ExclusionLog {
  std::size_t not_in_phenotypes = 0;
  std::size_t not_in_covariates = 0;
  std::size_t remove_listed = 0;
  std::size_t not_keep_listed = 0;
  // Table rows whose ID is absent from the genotype samples (not a dropped genotype sample).
  std::size_t not_in_genotypes = 0;

  std::size_t dropped_genotype_samples() const {
    return not_in_phenotypes + not_in_covariates + remove_listed + not_keep_listed;
  }
  bool operator==(const ExclusionLog&) const = default;
};

struct SampleAlignment {
  std::vector<std::string> kept_sample_ids;
  std::vector<std::size_t> genotype_row_index;
  std::vector<std::size_t> phenotype_row_index;
  std::vector<std::size_t> covariate_row_index;  // empty when no covariate table
  ExclusionLog exclusion_log;

  std::size_t n_kept() const { return kept_sample_ids.size(); }
  bool operator==(const SampleAlignment&) const = default;
};

// Intersects genotype samples with the tables and sample lists. The remove list wins over
// the keep list. Kept samples stay in genotype-file order.
SampleAlignment align_samples(const std::vector<std::string>& genotype_ids, const Table& phenotypes,
                              const Table* covariates = nullptr,
                              const std::vector<std::string>* keep = nullptr,
                              const std::vector<std::string>* remove = nullptr);

enum class MissingPolicy { Fail, MeanImpute };

enum class PanelState { Raw, Residualized, Standardized };

struct PhenotypePanel {
  Eigen::MatrixXd Y;  // N x P
  std::vector<std::string> names;
  std::vector<std::size_t> missing_count;
  PanelState state = PanelState::Raw;

  std::size_t n() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(Y.cols()); }
};

PhenotypePanel build_panel(const Table& table, const std::vector<std::size_t>& row_index,
                           MissingPolicy policy = MissingPolicy::MeanImpute);

// Covariate matrix for the kept samples; any missing cell is fatal.
Eigen::MatrixXd build_covariate_matrix(const Table& table, const std::vector<std::size_t>& row_index);

}  // namespace panelgwas
