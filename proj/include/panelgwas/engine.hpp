#pragma once

#include "panelgwas/genotype_io.hpp"
#include "panelgwas/kernel.hpp"
#include "panelgwas/phenotype_io.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace panelgwas {

enum class DfMode { NMinus2, Adjusted };
enum class OutputMode { Threshold, TopK, Full };

struct ScanConfig {
  GenotypeSpec genotypes;
  std::filesystem::path phenotype_path;
  std::filesystem::path covariate_path;  // empty: intercept only
  std::filesystem::path keep_path, remove_path;
  std::string id_column = "IID";
  char delimiter = '\t';
  std::vector<std::string> phenotype_columns;  // empty: every non-ID column
  std::vector<std::string> covariate_columns;
  MissingPolicy missing_policy = MissingPolicy::MeanImpute;

  std::size_t batch_size = 4096;
  Precision precision = Precision::F32StoreF64Acc;
  DfMode df_mode = DfMode::NMinus2;
  bool residualize_genotypes = false;
  OutputMode output_mode = OutputMode::Threshold;
  double p_threshold = 1e-4;
  std::size_t top_k = 100;
  std::size_t worker_count = 1;
  std::size_t queue_capacity = 0;  // 0: 2 x worker_count
  std::filesystem::path output_path;
  std::uint64_t full_byte_budget = 16ull << 30;
  bool allow_full_over_budget = false;
  bool write_qc = false;

  // Throws Error naming the first invalid field.
  void validate() const;
};

struct AssocRecord {
  std::string chrom;
  std::string id;
  std::uint64_t pos = 0;
  std::string counted_allele;
  std::string other_allele;
  double allele_frequency = 0.0;
  std::size_t missing_count = 0;
  std::string phenotype;
  std::size_t n = 0;
  double r = 0.0, t = 0.0, p = 1.0, df = 0.0;
  std::size_t source_index = 0;  // not written; used for ordering
};

struct ScanSummary {
  std::size_t n_samples = 0;
  double df = 0.0;
  std::size_t markers_total = 0;
  std::size_t markers_scanned = 0;
  std::size_t markers_skipped_monomorphic = 0;
  std::size_t markers_skipped_all_missing = 0;
  std::size_t markers_skipped_collinear = 0;
  std::size_t phenotypes_scanned = 0;
  std::size_t phenotypes_skipped = 0;
  std::size_t records_emitted = 0;
  std::size_t clamp_count = 0;
  std::size_t p_underflow_count = 0;
  double seconds_decode = 0.0, seconds_prepare = 0.0, seconds_correlate = 0.0, seconds_emit = 0.0;
  double seconds_preprocess = 0.0, seconds_total = 0.0;

  std::size_t markers_skipped() const {
    return markers_skipped_monomorphic + markers_skipped_all_missing + markers_skipped_collinear;
  }
  // Flat key/value pairs in a fixed order.
  std::vector<std::pair<std::string, std::string>> key_values() const;
};

// Contiguous [start, start+count) ranges covering [0, n_markers).
std::vector<std::pair<std::size_t, std::size_t>> plan_batches(std::size_t n_markers, std::size_t batch_size);

// Everything loaded before the genome scan: aligned samples, raw panel and covariates.
struct ScanInputs {
  std::unique_ptr<GenotypeSource> source;
  SampleAlignment alignment;
  PhenotypePanel panel;
  Eigen::MatrixXd covariates;  // n_kept x c (c may be 0)
  std::vector<std::string> covariate_names;
};

ScanInputs load_scan_inputs(const ScanConfig& config);

// The phenotype side after residualization and standardization, built once per scan.
struct PreparedPanel {
  CovariateBasis basis;
  Eigen::MatrixXd y_tilde;                 // N x P_active
  std::vector<std::size_t> active_columns;  // indices into the raw panel
  std::vector<std::string> active_names;
  std::vector<std::string> skipped_names;
  double df = 0.0;
};

PreparedPanel prepare_panel(const ScanInputs& inputs, const ScanConfig& config);

// Restrict a batch to the kept genotype columns (identity when every sample is kept).
RawBatch select_samples(RawBatch batch, const std::vector<std::size_t>& columns, std::size_t n_source_samples);

// One decoded, prepared, and correlated batch on its way to the writer.
struct BatchResult {
  std::size_t sequence = 0;
  std::vector<MarkerRecord> markers;
  std::vector<MarkerQc> qc;
  RowMatrixXd R;  // markers x active phenotypes
  std::size_t clamped = 0;
};

// Destination of scan results. consume() is called once per batch in marker order.
class ResultSink {
 public:
  virtual ~ResultSink() = default;
  virtual void consume(const BatchResult& batch) = 0;
  virtual void finish() {}
  std::size_t records_written() const { return records_; }
  std::size_t p_underflow() const { return underflow_; }

 protected:
  std::size_t records_ = 0;
  std::size_t underflow_ = 0;
};

struct SinkContext {
  std::vector<std::string> phenotype_names;
  std::size_t n = 0;
  double df = 0.0;
  bool counts_allele1 = true;
};

inline constexpr const char* kTsvHeader = "CHR\tID\tPOS\tA1\tA2\tAF\tN_MISS\tN\tDF\tR\tT\tP\tPHENO";

std::unique_ptr<ResultSink> make_threshold_sink(std::ostream& out, SinkContext ctx, double p_threshold);
std::unique_ptr<ResultSink> make_topk_sink(std::ostream& out, SinkContext ctx, std::size_t k);
std::unique_ptr<ResultSink> make_full_sink(const std::filesystem::path& out, SinkContext ctx, Precision precision);

// Feeds one batch to a sink; returns the number of records it wrote for this batch.
std::size_t emit_results(ResultSink& sink, const BatchResult& batch);

// Shortest round-trip decimal.
std::string format_double(double v);

std::string format_record(const AssocRecord& r);

// Full scan driven by files named in config.
ScanSummary run_scan(const ScanConfig& config);

// Full scan over already-loaded inputs.
ScanSummary run_scan(const ScanConfig& config, ScanInputs& inputs);

// Parses a THRESHOLD/TOPK results file.
std::vector<AssocRecord> read_results(const std::filesystem::path& path);

struct FullMatrix {
  std::uint32_t version = 0;
  std::uint32_t element_size = 0;
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major t-statistics
};

FullMatrix read_full_matrix(const std::filesystem::path& path);

void write_summary_json(const std::filesystem::path& path, const ScanSummary& summary);

}  // namespace panelgwas
