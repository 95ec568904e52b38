#include "sources.hpp"

#include <array>

namespace panelgwas {

namespace {

// Dosage (allele1 count) per 2-bit code: 00 hom allele1, 01 missing, 10 het, 11 hom allele2.
constexpr std::array<double, 4> kCodeDosage = {2.0, kMissing, 1.0, 0.0};

struct ByteTable {
  std::array<std::array<double, 4>, 256> entries;
  ByteTable() {
    for (int b = 0; b < 256; ++b)
      for (int s = 0; s < 4; ++s) entries[b][s] = kCodeDosage[(b >> (2 * s)) & 3];
  }
};

const ByteTable& byte_table() {
  static const ByteTable t;
  return t;
}

}  // namespace

void decode_bed_codes(std::span<const std::uint8_t> packed, std::size_t n_samples, std::span<double> out) {
  const std::size_t nbytes = (n_samples + 3) / 4;
  if (packed.size() < nbytes) throw Error("decode_bed_codes: packed row shorter than ceil(n/4) bytes");
  if (out.size() < n_samples) throw Error("decode_bed_codes: output shorter than n_samples");
  const auto& t = byte_table().entries;
  const std::size_t full = n_samples / 4;
  double* dst = out.data();
  for (std::size_t b = 0; b < full; ++b, dst += 4) {
    const auto& e = t[packed[b]];
    dst[0] = e[0];
    dst[1] = e[1];
    dst[2] = e[2];
    dst[3] = e[3];
  }
  const std::size_t rest = n_samples - 4 * full;
  if (rest > 0) {
    const auto& e = t[packed[full]];
    for (std::size_t s = 0; s < rest; ++s) dst[s] = e[s];
  }
}

std::vector<double> decode_bed_codes(std::span<const std::uint8_t> packed, std::size_t n_samples) {
  std::vector<double> out(n_samples);
  decode_bed_codes(packed, n_samples, out);
  return out;
}

namespace detail {

PlinkSource::PlinkSource(const std::filesystem::path& bed, const std::filesystem::path& bim,
                         const std::filesystem::path& fam)
    : bed_path_(bed) {
  for (const auto& p : {bed, bim, fam})
    if (!std::filesystem::exists(p)) throw Error("missing file: " + p.string());
  markers_ = read_bim(bim);
  set_samples(read_fam_ids(fam));

  bed_.open(bed, std::ios::binary);
  if (!bed_) throw Error("cannot open " + bed.string());
  std::array<unsigned char, 3> magic{};
  if (!bed_.read(reinterpret_cast<char*>(magic.data()), 3))
    throw FormatError(bed.string() + ": file too short for .bed header");
  if (magic[0] != 0x6C || magic[1] != 0x1B)
    throw FormatError(bed.string() + ": bad .bed magic bytes");
  if (magic[2] == 0x00) throw FormatError(bed.string() + ": unsupported sample-major layout");
  if (magic[2] != 0x01) throw FormatError(bed.string() + ": bad .bed mode byte");

  bytes_per_marker_ = (n_samples() + 3) / 4;
  const auto size = std::filesystem::file_size(bed);
  const auto expected = 3 + static_cast<std::uintmax_t>(bytes_per_marker_) * n_markers();
  if (size != expected)
    throw FormatError(bed.string() + ": size " + std::to_string(size) + " does not match " +
                      std::to_string(n_markers()) + " markers x " + std::to_string(n_samples()) +
                      " samples from .bim/.fam (expected " + std::to_string(expected) + " bytes)");
}

void PlinkSource::read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) {
  buffer_.resize(bytes_per_marker_ * count);
  bed_.clear();
  bed_.seekg(static_cast<std::streamoff>(3 + start * bytes_per_marker_));
  if (!bed_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size())))
    throw FormatError(bed_path_.string() + ": truncated while reading markers " + std::to_string(start) +
                      ".." + std::to_string(start + count - 1));
  const std::size_t n = n_samples();
  for (std::size_t m = 0; m < count; ++m) {
    decode_bed_codes(std::span(buffer_).subspan(m * bytes_per_marker_, bytes_per_marker_), n,
                     std::span(out.row(static_cast<Eigen::Index>(m)).data(), n));
  }
}

}  // namespace detail
}  // namespace panelgwas
