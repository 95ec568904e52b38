// Reader for the BGEN v1.2 subset: layout 2, zlib-compressed genotype blocks,
// unphased diploid biallelic variants with 8- or 16-bit probabilities.
#include "sources.hpp"

#include <zlib.h>

#include <cstring>

namespace panelgwas::detail {

namespace {

class ByteReader {
 public:
  ByteReader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  void bytes(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
      throw FormatError(path_.string() + ": unexpected end of BGEN file");
  }
  std::uint16_t u16() {
    unsigned char b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::string str(std::size_t n) {
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  void skip(std::uint64_t n) { in_.seekg(static_cast<std::streamoff>(n), std::ios::cur); }
  std::uint64_t tell() { return static_cast<std::uint64_t>(in_.tellg()); }

 private:
  std::ifstream& in_;
  const std::filesystem::path& path_;
};

std::uint32_t read_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

BgenSource::BgenSource(const std::filesystem::path& bgen, const std::filesystem::path& sample_ids)
    : path_(bgen) {
  if (!std::filesystem::exists(bgen)) throw Error("missing file: " + bgen.string());
  in_.open(bgen, std::ios::binary);
  if (!in_) throw Error("cannot open " + bgen.string());
  ByteReader r(in_, path_);

  const std::uint32_t first_variant_offset = r.u32();
  const std::uint32_t header_len = r.u32();
  const std::uint32_t n_variants = r.u32();
  const std::uint32_t n_samples = r.u32();
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "bgen", 4) != 0 && std::memcmp(magic, "\0\0\0\0", 4) != 0)
    throw FormatError(bgen.string() + ": bad BGEN magic");
  if (header_len < 20) throw FormatError(bgen.string() + ": bad BGEN header length");
  r.skip(header_len - 20);
  const std::uint32_t flags = r.u32();
  const std::uint32_t compression = flags & 0x3;
  const std::uint32_t layout = (flags >> 2) & 0xf;
  const bool has_sample_block = (flags >> 31) & 1;
  if (layout != 2) throw UnsupportedFeature("layout " + std::to_string(layout));
  if (compression != 1)
    throw UnsupportedFeature(compression == 0 ? "uncompressed genotype blocks" :
                             compression == 2 ? "zstd compression" : "compression code " + std::to_string(compression));

  std::vector<std::string> ids;
  if (has_sample_block) {
    r.u32();  // block length
    const std::uint32_t n = r.u32();
    if (n != n_samples) throw FormatError(bgen.string() + ": sample block count disagrees with header");
    ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) ids.push_back(r.str(r.u16()));
  }
  if (!sample_ids.empty()) {
    auto side = read_id_list(sample_ids);
    if (side.size() != n_samples)
      throw FormatError(sample_ids.string() + ": " + std::to_string(side.size()) +
                        " sample IDs but BGEN header declares " + std::to_string(n_samples));
    ids = std::move(side);
  }
  if (ids.empty() && n_samples > 0)
    throw Error(bgen.string() + ": no sample identifiers in file; provide a sample-id sidecar");
  set_samples(std::move(ids));

  in_.seekg(static_cast<std::streamoff>(first_variant_offset) + 4);
  markers_.reserve(n_variants);
  block_offsets_.reserve(n_variants);
  for (std::uint32_t v = 0; v < n_variants; ++v) {
    MarkerRecord m;
    const std::string varid = r.str(r.u16());
    const std::string rsid = r.str(r.u16());
    m.chrom = r.str(r.u16());
    m.pos = r.u32();
    const std::uint16_t n_alleles = r.u16();
    if (n_alleles != 2) throw UnsupportedFeature("multiallelic variant '" + rsid + "' (" + std::to_string(n_alleles) + " alleles)");
    m.allele1 = r.str(r.u32());
    m.allele2 = r.str(r.u32());
    m.id = rsid.empty() ? varid : rsid;
    m.source_index = v;
    block_offsets_.push_back(r.tell());
    const std::uint32_t block_len = r.u32();
    r.skip(block_len);
    markers_.push_back(std::move(m));
  }
  if (!in_) throw FormatError(bgen.string() + ": truncated variant data");
}

void BgenSource::decode_probabilities(std::span<const std::uint8_t> data, std::size_t marker,
                                      double* row) const {
  const std::size_t n = n_samples();
  const std::string& id = markers_[marker].id;
  if (data.size() < 10) throw FormatError(path_.string() + ": genotype block too short for '" + id + "'");
  const std::uint8_t* p = data.data();
  if (read_le32(p) != n) throw FormatError(path_.string() + ": sample count mismatch in '" + id + "'");
  const std::uint16_t k = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (k != 2) throw UnsupportedFeature("multiallelic variant '" + id + "'");
  const std::uint8_t pmin = p[6], pmax = p[7];
  if (pmin != 2 || pmax != 2) throw UnsupportedFeature("non-diploid ploidy in '" + id + "'");
  if (data.size() < 10 + n) throw FormatError(path_.string() + ": genotype block truncated for '" + id + "'");
  const std::uint8_t* ploidy = p + 8;
  const std::uint8_t phased = p[8 + n];
  const std::uint8_t bits = p[9 + n];
  if (phased != 0) throw UnsupportedFeature("phased probabilities in '" + id + "'");
  if (bits != 8 && bits != 16) throw UnsupportedFeature(std::to_string(bits) + "-bit probabilities");
  const std::size_t bytes_per = bits / 8;
  const std::uint8_t* probs = p + 10 + n;
  if (data.size() < 10 + n + 2 * bytes_per * n)
    throw FormatError(path_.string() + ": probability data truncated for '" + id + "'");
  const std::uint32_t full = (1u << bits) - 1;
  const double scale = static_cast<double>(full);
  for (std::size_t i = 0; i < n; ++i) {
    if (ploidy[i] & 0x80) {
      row[i] = kMissing;
      continue;
    }
    if ((ploidy[i] & 0x3f) != 2) throw UnsupportedFeature("non-diploid sample in '" + id + "'");
    const std::uint8_t* s = probs + 2 * bytes_per * i;
    std::uint32_t v0, v1;
    if (bytes_per == 1) {
      v0 = s[0];
      v1 = s[1];
    } else {
      v0 = s[0] | (s[1] << 8);
      v1 = s[2] | (s[3] << 8);
    }
    // Work in integer quanta so hard calls decode exactly.
    const std::uint32_t v2 = v0 + v1 >= full ? 0u : full - v0 - v1;
    row[i] = bgen_expected_dosage(v0, v1, v2) / scale;
  }
}

void BgenSource::read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) {
  ByteReader r(in_, path_);
  for (std::size_t m = 0; m < count; ++m) {
    const std::size_t v = start + m;
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(block_offsets_[v]));
    const std::uint32_t block_len = r.u32();
    if (block_len < 4) throw FormatError(path_.string() + ": bad genotype block length");
    const std::uint32_t raw_len = r.u32();
    compressed_.resize(block_len - 4);
    r.bytes(compressed_.data(), compressed_.size());
    decompressed_.resize(raw_len);
    uLongf dest_len = raw_len;
    const int rc = uncompress(decompressed_.data(), &dest_len, compressed_.data(),
                              static_cast<uLong>(compressed_.size()));
    if (rc != Z_OK || dest_len != raw_len)
      throw FormatError(path_.string() + ": BGEN decompression failed for variant '" + markers_[v].id + "'");
    decode_probabilities(decompressed_, v, out.row(static_cast<Eigen::Index>(m)).data());
  }
}

}  // namespace panelgwas::detail
