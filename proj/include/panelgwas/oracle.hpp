#pragma once

#include "panelgwas/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace panelgwas::oracle {

// Statistics for the genotype term of y ~ intercept (+ covariates) + g.
struct OlsResult {
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Row-major view of an N x c covariate matrix (c may be 0).
struct CovariateView {
  std::span<const double> values;
  std::size_t cols = 0;
};

// Plain least squares through the normal equations, solved by Gaussian elimination with
// complete pivoting. Shares no linear algebra with the association kernel.
OlsResult ols_single(std::span<const double> y, std::span<const double> g, CovariateView covariates = {});

// Same, but with an explicit residual degrees of freedom instead of N - k.
OlsResult ols_single_with_df(std::span<const double> y, std::span<const double> g, CovariateView covariates,
                             double df);

struct SimSpec {
  std::uint64_t seed = 1;
  std::size_t n_samples = 1000;
  std::size_t n_markers = 1000;
  std::size_t n_phenotypes = 4;
  std::size_t n_covariates = 0;
  double causal_fraction = 0.0;
  double effect_sd = 0.1;
  double noise_sd = 1.0;
  double covariate_effect_sd = 0.5;
  double genotype_missing_rate = 0.0;
  double phenotype_missing_rate = 0.0;
  double af_min = 0.05;
  double af_max = 0.5;

  void validate() const;
};

struct SimulatedCohort {
  std::filesystem::path prefix;  // <prefix>.bed/.bim/.fam
  std::filesystem::path phenotype_path;
  std::filesystem::path covariate_path;  // empty when n_covariates == 0
  std::filesystem::path truth_path;
  std::size_t causal_per_phenotype = 0;
};

// Writes <prefix>.bed/.bim/.fam, <prefix>.pheno.tsv, <prefix>.covar.tsv and
// <prefix>.truth.tsv. Deterministic for a fixed seed.
SimulatedCohort simulate_cohort(const SimSpec& spec, const std::filesystem::path& prefix);

// Writes a SNP-major PLINK fileset. dosages is markers x samples holding 0, 1, 2 or NaN
// (allele1 counts).
void write_plink(const std::filesystem::path& prefix, const std::vector<MarkerRecord>& markers,
                 const std::vector<std::string>& sample_ids, const RowMatrixXd& dosages);

// Packs one marker's dosages into ceil(n/4) .bed bytes.
std::vector<std::uint8_t> encode_bed_row(std::span<const double> dosages);

struct KeyedStat {
  std::string marker;
  std::string phenotype;
  double t = 0.0;
  double p = 1.0;
};

struct PairDiff {
  std::string marker, phenotype;
  double neglog10p_a = 0.0, neglog10p_b = 0.0, t_a = 0.0, t_b = 0.0;
};

struct ConcordanceReport {
  std::size_t pairs = 0;
  double pearson_neglog10p = 0.0;
  double max_abs_dt = 0.0;
  double sign_agreement = 0.0;
  std::vector<PairDiff> worst;  // up to 10, largest |delta -log10 p| first

  std::string to_text() const;
  std::vector<std::pair<std::string, std::string>> key_values() const;
};

// Both sides must cover the same (marker, phenotype) keys.
ConcordanceReport concordance_report(const std::vector<KeyedStat>& engine, const std::vector<KeyedStat>& oracle);

std::vector<KeyedStat> keyed(const std::vector<AssocRecord>& records);

// Full-model OLS (intercept + covariates + g) for every marker/phenotype pair of a scan
// configuration, using the engine's sample alignment, phenotype panel and mean imputation of
// missing genotypes. Monomorphic and all-missing markers and constant phenotypes are left out.
std::vector<KeyedStat> oracle_scan(const ScanConfig& config);

}  // namespace panelgwas::oracle
