#pragma once

#include "support.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace testing_support {

// Raw .bed rows with the dosages an independent PLINK reader (bed-reader, allele-1 counts)
// produced for them. Generated once and frozen.
struct BedFixture {
  std::size_t n;
  std::vector<std::vector<std::uint8_t>> bytes;
  std::vector<std::vector<double>> want;
};

inline std::vector<BedFixture> frozen_bed_fixtures() {
  constexpr double NA = std::numeric_limits<double>::quiet_NaN();
  return {
      {4, {{0xD8}, {0x00}, {0xFF}, {0x55}}, {{2, 1, NA, 0}, {2, 2, 2, 2}, {0, 0, 0, 0}, {NA, NA, NA, NA}}},
      {5, {{0x1B, 0x02}, {0xE4, 0x03}, {0x6C, 0xFD}}, {{0, 1, NA, 2, 1}, {2, NA, 1, 0, 0}, {2, 0, 1, NA, NA}}},
      {9,
       {{0x9C, 0x31, 0x01}, {0x47, 0xA5, 0x02}, {0xF0, 0x0F, 0x03}, {0x55, 0xAA, 0x00}},
       {{2, 0, NA, 1, NA, 2, 0, 2, NA},
        {0, NA, 2, NA, NA, NA, 1, 1, 1},
        {2, 2, 0, 0, 0, 0, 2, 2, 0},
        {NA, NA, NA, NA, 1, 1, 1, 1, 2}}},
  };
}

// Writes <prefix>.bed/.bim/.fam around raw .bed rows.
inline void write_bed_fileset(const fs::path& prefix, std::size_t n, const std::vector<std::vector<std::uint8_t>>& rows,
                              std::vector<std::uint8_t> magic = {0x6C, 0x1B, 0x01}) {
  std::vector<std::uint8_t> bed = magic;
  for (const auto& r : rows) bed.insert(bed.end(), r.begin(), r.end());
  write_bytes(prefix.string() + ".bed", bed);
  std::string fam, bim;
  for (std::size_t i = 0; i < n; ++i) fam += "F" + std::to_string(i) + " S" + std::to_string(i) + " 0 0 0 -9\n";
  for (std::size_t j = 0; j < rows.size(); ++j)
    bim += "1\tsnp" + std::to_string(j) + "\t0\t" + std::to_string(j + 1) + "\tA\tG\n";
  write_text(prefix.string() + ".fam", fam);
  write_text(prefix.string() + ".bim", bim);
}

}  // namespace testing_support
