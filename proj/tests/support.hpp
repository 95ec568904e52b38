#pragma once

#include "panelgwas/common.hpp"
#include "panelgwas/engine.hpp"
#include "panelgwas/genotype_io.hpp"

#include <zlib.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("pgw-test-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

inline void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Minimal BGEN v1.2 writer, layout 2. probs holds (p0, p1, p2) per marker and sample;
// NaN in p0 marks the sample missing.
struct BgenWriteOptions {
  unsigned bits = 8;
  bool sample_block = true;
  std::uint32_t compression = 1;  // 0 none, 1 zlib, 2 zstd (header only)
  std::uint32_t layout = 2;
  std::uint16_t n_alleles = 2;
};

inline void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}
inline void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}
inline void put_str16(std::vector<std::uint8_t>& b, const std::string& s) {
  put16(b, static_cast<std::uint16_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}
inline void put_str32(std::vector<std::uint8_t>& b, const std::string& s) {
  put32(b, static_cast<std::uint32_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}

// Splits 1 into two quantized values of the given bit width, nearest-rounding p0 and p1.
inline std::pair<std::uint32_t, std::uint32_t> quantize(double p0, double p1, unsigned bits) {
  const double scale = static_cast<double>((1u << bits) - 1);
  auto q0 = static_cast<std::uint32_t>(std::lround(p0 * scale));
  auto q1 = static_cast<std::uint32_t>(std::lround(p1 * scale));
  if (q0 + q1 > static_cast<std::uint32_t>(scale)) q1 = static_cast<std::uint32_t>(scale) - q0;
  return {q0, q1};
}

inline void write_bgen(const fs::path& path, const std::vector<panelgwas::MarkerRecord>& markers,
                       const std::vector<std::string>& ids, const std::vector<std::vector<std::array<double, 3>>>& probs,
                       const BgenWriteOptions& opt = {}) {
  const auto n = static_cast<std::uint32_t>(ids.size());
  std::vector<std::uint8_t> header;
  put32(header, 20);  // header length
  put32(header, static_cast<std::uint32_t>(markers.size()));
  put32(header, n);
  header.insert(header.end(), {'b', 'g', 'e', 'n'});
  std::uint32_t flags = opt.compression | (opt.layout << 2) | (opt.sample_block ? (1u << 31) : 0u);
  put32(header, flags);

  std::vector<std::uint8_t> sample_block;
  if (opt.sample_block) {
    std::vector<std::uint8_t> body;
    put32(body, n);
    for (const auto& id : ids) put_str16(body, id);
    put32(sample_block, static_cast<std::uint32_t>(body.size() + 4));
    sample_block.insert(sample_block.end(), body.begin(), body.end());
  }

  std::vector<std::uint8_t> out;
  put32(out, static_cast<std::uint32_t>(header.size() + sample_block.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), sample_block.begin(), sample_block.end());

  for (std::size_t m = 0; m < markers.size(); ++m) {
    const auto& r = markers[m];
    put_str16(out, "var" + std::to_string(m));
    put_str16(out, r.id);
    put_str16(out, r.chrom);
    put32(out, static_cast<std::uint32_t>(r.pos));
    put16(out, opt.n_alleles);
    put_str32(out, r.allele1);
    put_str32(out, r.allele2);

    std::vector<std::uint8_t> raw;
    put32(raw, n);
    put16(raw, 2);
    raw.push_back(2);
    raw.push_back(2);
    for (std::uint32_t i = 0; i < n; ++i) raw.push_back(std::isnan(probs[m][i][0]) ? 0x82 : 0x02);
    raw.push_back(0);
    raw.push_back(static_cast<std::uint8_t>(opt.bits));
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto& p = probs[m][i];
      auto [q0, q1] = std::isnan(p[0]) ? std::pair<std::uint32_t, std::uint32_t>{0, 0} : quantize(p[0], p[1], opt.bits);
      if (opt.bits == 8) {
        raw.push_back(static_cast<std::uint8_t>(q0));
        raw.push_back(static_cast<std::uint8_t>(q1));
      } else {
        put16(raw, static_cast<std::uint16_t>(q0));
        put16(raw, static_cast<std::uint16_t>(q1));
      }
    }
    uLongf clen = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(clen);
    compress(comp.data(), &clen, raw.data(), static_cast<uLong>(raw.size()));
    comp.resize(clen);
    put32(out, static_cast<std::uint32_t>(comp.size() + 4));
    put32(out, static_cast<std::uint32_t>(raw.size()));
    out.insert(out.end(), comp.begin(), comp.end());
  }
  write_bytes(path, out);
}

// Hard-call genotype probabilities for dosage d (allele2 count).
inline std::array<double, 3> hard_probs(double d) {
  if (std::isnan(d)) return {std::nan(""), 0, 0};
  if (d == 0) return {1, 0, 0};
  if (d == 1) return {0, 1, 0};
  return {0, 0, 1};
}

inline std::vector<panelgwas::MarkerRecord> make_markers(std::size_t m) {
  std::vector<panelgwas::MarkerRecord> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i].chrom = std::to_string(1 + i % 22);
    out[i].id = "m" + std::to_string(i);
    out[i].pos = 100 + 17 * i;
    out[i].allele1 = i % 2 ? "C" : "A";
    out[i].allele2 = i % 2 ? "T" : "G";
    out[i].source_index = i;
  }
  return out;
}

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "S") {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = prefix + std::to_string(i + 1);
  return ids;
}

// Random hard-call dosages with optional missingness.
inline panelgwas::RowMatrixXd random_dosages(std::mt19937_64& rng, std::size_t m, std::size_t n, double miss = 0.0) {
  std::uniform_real_distribution<double> u(0, 1);
  panelgwas::RowMatrixXd d(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    const double af = 0.05 + 0.9 * u(rng);
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      d(r, c) = u(rng) < miss ? panelgwas::kMissing : (u(rng) < af) + (u(rng) < af);
  }
  return d;
}

// ID-keyed TSV; NaN is written as NA.
inline void write_table(const fs::path& path, const std::vector<std::string>& ids, const std::vector<std::string>& names,
                        const Eigen::MatrixXd& values) {
  std::ofstream out(path, std::ios::trunc);
  out << "IID";
  for (const auto& n : names) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(static_cast<Eigen::Index>(i), j);
      out << '\t' << (std::isnan(v) ? std::string("NA") : panelgwas::format_double(v));
    }
    out << '\n';
  }
}

}  // namespace testing_support
