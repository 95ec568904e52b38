#include "panelgwas/npy.hpp"

#include "panelgwas/common.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <string>

namespace panelgwas::npy {

namespace {

constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::size_t parse_dim(const std::string& s) {
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::exception&) {
    throw FormatError("NPY header: bad dimension '" + s + "'");
  }
}

}  // namespace

Header read_header(std::istream& in) {
  std::array<char, 8> pre{};
  if (!in.read(pre.data(), pre.size()) || std::memcmp(pre.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("not an NPY file (bad magic)");
  const auto major = static_cast<unsigned char>(pre[6]);
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) throw FormatError("NPY header truncated");
    header_len = b[0] | (static_cast<std::size_t>(b[1]) << 8);
    prefix = 10;
  } else if (major == 2) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("NPY header truncated");
    header_len = b[0] | (static_cast<std::size_t>(b[1]) << 8) |
                 (static_cast<std::size_t>(b[2]) << 16) | (static_cast<std::size_t>(b[3]) << 24);
    prefix = 12;
  } else {
    throw FormatError("unsupported NPY version " + std::to_string(major));
  }
  std::string dict(header_len, '\0');
  if (!in.read(dict.data(), static_cast<std::streamsize>(header_len)))
    throw FormatError("NPY header truncated");

  Header h;
  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  if (!std::regex_search(dict, m, descr_re)) throw FormatError("NPY header: missing descr");
  const std::string descr = m[1];
  if (descr == "<f8" || descr == "=f8")
    h.element_size = 8;
  else if (descr == "<f4" || descr == "=f4")
    h.element_size = 4;
  else
    throw FormatError("NPY element type '" + descr + "' not supported (need <f4 or <f8)");
  if (!std::regex_search(dict, m, order_re)) throw FormatError("NPY header: missing fortran_order");
  if (m[1] == "True") throw FormatError("NPY arrays in Fortran order are not supported");
  if (!std::regex_search(dict, m, shape_re)) throw FormatError("NPY header: missing shape");
  std::vector<std::size_t> dims;
  const std::string shape = m[1];
  static const std::regex num_re(R"(\d+)");
  for (auto it = std::sregex_iterator(shape.begin(), shape.end(), num_re); it != std::sregex_iterator(); ++it)
    dims.push_back(parse_dim(it->str()));
  if (dims.size() != 2)
    throw FormatError("NPY array must be 2-D, got " + std::to_string(dims.size()) + " dimensions");
  h.rows = dims[0];
  h.cols = dims[1];
  h.data_offset = prefix + header_len;
  return h;
}

void write(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
           std::size_t cols, std::size_t element_size) {
  if (values.size() != rows * cols) throw Error("npy::write: value count does not match shape");
  if (element_size != 4 && element_size != 8) throw Error("npy::write: element size must be 4 or 8");
  std::string dict = "{'descr': '<f" + std::to_string(element_size) +
                     "', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
                     std::to_string(cols) + "), }";
  // Pad so that the data starts on a 64-byte boundary; the header ends with '\n'.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  out.put('\x01');
  out.put('\x00');
  const auto len = static_cast<std::uint16_t>(dict.size());
  out.put(static_cast<char>(len & 0xff));
  out.put(static_cast<char>(len >> 8));
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  if (element_size == 8) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    std::vector<float> f(values.begin(), values.end());
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<double> read_all(const std::filesystem::path& path, Header* header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const Header h = read_header(in);
  const std::size_t n = h.rows * h.cols;
  std::vector<double> out(n);
  if (h.element_size == 8) {
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n * 8));
  } else {
    std::vector<float> f(n);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(n * 4));
    std::copy(f.begin(), f.end(), out.begin());
  }
  if (!in) throw FormatError("NPY data truncated: " + path.string());
  if (header_out) *header_out = h;
  return out;
}

}  // namespace panelgwas::npy
