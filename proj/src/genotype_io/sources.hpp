#pragma once

#include "panelgwas/genotype_io.hpp"
#include "panelgwas/npy.hpp"

#include <fstream>

namespace panelgwas::detail {

class PlinkSource final : public GenotypeSource {
 public:
  PlinkSource(const std::filesystem::path& bed, const std::filesystem::path& bim,
              const std::filesystem::path& fam);
  GenotypeFormat format() const override { return GenotypeFormat::PlinkBed; }

 protected:
  void read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) override;

 private:
  std::filesystem::path bed_path_;
  std::ifstream bed_;
  std::size_t bytes_per_marker_ = 0;
  std::vector<std::uint8_t> buffer_;
};

class BgenSource final : public GenotypeSource {
 public:
  BgenSource(const std::filesystem::path& bgen, const std::filesystem::path& sample_ids);
  GenotypeFormat format() const override { return GenotypeFormat::Bgen; }

 protected:
  void read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) override;

 private:
  void decode_probabilities(std::span<const std::uint8_t> data, std::size_t marker, double* row) const;

  std::filesystem::path path_;
  std::ifstream in_;
  // Offset of each variant's genotype data block (its length field).
  std::vector<std::uint64_t> block_offsets_;
  std::vector<std::uint8_t> compressed_, decompressed_;
};

class DenseSource final : public GenotypeSource {
 public:
  DenseSource(const std::filesystem::path& npy, const std::filesystem::path& sample_ids,
              DenseOrientation orientation);
  GenotypeFormat format() const override { return GenotypeFormat::Dense; }

 protected:
  void read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) override;

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  npy::Header header_;
  DenseOrientation orientation_;
  std::vector<char> buffer_;
};

}  // namespace panelgwas::detail
