#include "sources.hpp"

#include <cstring>

namespace panelgwas::detail {

DenseSource::DenseSource(const std::filesystem::path& npy, const std::filesystem::path& sample_ids,
                         DenseOrientation orientation)
    : path_(npy), orientation_(orientation) {
  if (!std::filesystem::exists(npy)) throw Error("missing file: " + npy.string());
  if (!std::filesystem::exists(sample_ids)) throw Error("missing file: " + sample_ids.string());
  in_.open(npy, std::ios::binary);
  if (!in_) throw Error("cannot open " + npy.string());
  header_ = npy::read_header(in_);

  const bool by_marker = orientation == DenseOrientation::MarkersBySamples;
  const std::size_t n_markers = by_marker ? header_.rows : header_.cols;
  const std::size_t n_samples = by_marker ? header_.cols : header_.rows;
  auto ids = read_id_list(sample_ids);
  if (ids.size() != n_samples)
    throw FormatError(npy.string() + ": array has " + std::to_string(n_samples) + " samples but " +
                      sample_ids.string() + " lists " + std::to_string(ids.size()));
  set_samples(std::move(ids));

  const auto expected = header_.data_offset + header_.rows * header_.cols * header_.element_size;
  if (std::filesystem::file_size(npy) < expected) throw FormatError(npy.string() + ": array data truncated");

  markers_.reserve(n_markers);
  for (std::size_t m = 0; m < n_markers; ++m) {
    MarkerRecord r;
    r.chrom = "0";
    r.id = "dense_" + std::to_string(m);
    r.pos = 0;
    r.allele1 = "A1";
    r.allele2 = "A2";
    r.source_index = m;
    markers_.push_back(std::move(r));
  }
}

void DenseSource::read_rows(std::size_t start, std::size_t count, RowMatrixXd& out) {
  const std::size_t n = n_samples();
  const std::size_t es = header_.element_size;
  auto load = [&](std::size_t offset_elems, std::size_t n_elems) {
    buffer_.resize(n_elems * es);
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(header_.data_offset + offset_elems * es));
    if (!in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size())))
      throw FormatError(path_.string() + ": truncated while reading markers");
  };
  auto value = [&](std::size_t j) {
    if (es == 8) {
      double d;
      std::memcpy(&d, buffer_.data() + 8 * j, 8);
      return d;
    }
    float f;
    std::memcpy(&f, buffer_.data() + 4 * j, 4);
    return static_cast<double>(f);
  };

  if (orientation_ == DenseOrientation::MarkersBySamples) {
    load(start * n, count * n);
    for (std::size_t m = 0; m < count; ++m)
      for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = value(m * n + i);
  } else {
    const std::size_t total = n_markers();
    for (std::size_t i = 0; i < n; ++i) {
      load(i * total + start, count);
      for (std::size_t m = 0; m < count; ++m) out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = value(m);
    }
  }

  for (std::size_t m = 0; m < count; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
      if (!is_missing(d) && !(d >= 0.0 && d <= 2.0))
        throw FormatError(path_.string() + ": dosage " + std::to_string(d) + " outside [0,2] at marker " +
                          std::to_string(start + m) + ", sample " + std::to_string(i));
    }
  }
}

}  // namespace panelgwas::detail
