#pragma once

#include "panelgwas/common.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace panelgwas {

struct MarkerRecord {
  std::string chrom;
  std::string id;
  std::uint64_t pos = 0;
  std::string allele1;
  std::string allele2;
  std::size_t source_index = 0;
};

enum class GenotypeFormat { PlinkBed, Bgen, Dense };

enum class DenseOrientation { MarkersBySamples, SamplesByMarkers };

// Where to find a genotype dataset and how to interpret it.
struct GenotypeSpec {
  GenotypeFormat format = GenotypeFormat::PlinkBed;
  std::filesystem::path bed, bim, fam;
  std::filesystem::path bgen;
  // Optional for BGEN (used when the file has no sample block), required for dense.
  std::filesystem::path sample_ids;
  std::filesystem::path dense;
  DenseOrientation orientation = DenseOrientation::MarkersBySamples;

  static GenotypeSpec plink_prefix(const std::string& prefix);
};

// A decoded block of consecutive markers. Rows are markers, columns samples.
struct RawBatch {
  std::size_t sequence = 0;
  std::vector<MarkerRecord> markers;
  RowMatrixXd dosages;
  std::vector<std::size_t> missing_count;
  // True when the dosage counts allele1 (PLINK, dense); false for allele2 (BGEN).
  bool counts_allele1 = true;

  std::size_t size() const { return markers.size(); }
};

// Sequential single-consumer reader over one genotype dataset.
class GenotypeSource {
 public:
  virtual ~GenotypeSource() = default;

  virtual GenotypeFormat format() const = 0;
  std::size_t n_samples() const { return sample_ids_.size(); }
  std::size_t n_markers() const { return markers_.size(); }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  const std::vector<MarkerRecord>& markers() const { return markers_; }
  bool counts_allele1() const { return format() != GenotypeFormat::Bgen; }

  // Returns markers [start, start + min(count, n_markers - start)).
  RawBatch read_marker_batch(std::size_t start, std::size_t count);

 protected:
  virtual void read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) = 0;
  void set_samples(std::vector<std::string> ids);

  std::vector<std::string> sample_ids_;
  std::vector<MarkerRecord> markers_;
};

std::unique_ptr<GenotypeSource> open_genotype_source(const GenotypeSpec& spec);

// 2-bit SNP-major .bed decoding; writes n_samples dosages (allele1 counts) into out.
void decode_bed_codes(std::span<const std::uint8_t> packed, std::size_t n_samples,
                      std::span<double> out);
std::vector<double> decode_bed_codes(std::span<const std::uint8_t> packed, std::size_t n_samples);

// Expected allele2 count from diploid biallelic genotype probabilities.
inline double bgen_expected_dosage(double p0, double p1, double p2) {
  (void)p0;
  return p1 + 2.0 * p2;
}

// Reading helpers shared by the PLINK and sample-list parsers.
std::vector<MarkerRecord> read_bim(const std::filesystem::path& path);
std::vector<std::string> read_fam_ids(const std::filesystem::path& path);
std::vector<std::string> read_id_list(const std::filesystem::path& path);

// Throws FormatError when ids contains a duplicate.
void require_unique_ids(const std::vector<std::string>& ids, const std::string& what);

}  // namespace panelgwas
