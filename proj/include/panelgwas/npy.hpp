#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <vector>

namespace panelgwas::npy {

// Header of a little-endian 2-D float NPY array (format versions 1.0 and 2.0).
struct Header {
  std::size_t element_size = 8;  // 4 or 8
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t data_offset = 0;
};

Header read_header(std::istream& in);

// Writes a C-order 2-D array as NPY v1.0; element_size selects '<f4' or '<f8'.
void write(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
           std::size_t cols, std::size_t element_size);

// Reads the whole array (converted to double, row-major).
std::vector<double> read_all(const std::filesystem::path& path, Header* header_out = nullptr);

}  // namespace panelgwas::npy
