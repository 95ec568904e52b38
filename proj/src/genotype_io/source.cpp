#include "panelgwas/genotype_io.hpp"

#include "panelgwas/log.hpp"
#include "sources.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace panelgwas {

GenotypeSpec GenotypeSpec::plink_prefix(const std::string& prefix) {
  GenotypeSpec s;
  s.format = GenotypeFormat::PlinkBed;
  s.bed = prefix + ".bed";
  s.bim = prefix + ".bim";
  s.fam = prefix + ".fam";
  return s;
}

void require_unique_ids(const std::vector<std::string>& ids, const std::string& what) {
  std::unordered_set<std::string> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw FormatError("duplicate sample ID '" + id + "' in " + what);
  }
}

void GenotypeSource::set_samples(std::vector<std::string> ids) {
  require_unique_ids(ids, "genotype samples");
  sample_ids_ = std::move(ids);
}

RawBatch GenotypeSource::read_marker_batch(std::size_t start, std::size_t count) {
  if (start >= n_markers())
    throw Error("read_marker_batch: start " + std::to_string(start) + " is past the last marker");
  if (count == 0) throw Error("read_marker_batch: count must be at least 1");
  const std::size_t n = std::min(count, n_markers() - start);

  RawBatch batch;
  batch.counts_allele1 = counts_allele1();
  batch.markers.assign(markers_.begin() + static_cast<std::ptrdiff_t>(start),
                       markers_.begin() + static_cast<std::ptrdiff_t>(start + n));
  batch.dosages.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_samples()));
  read_rows(start, n, batch.dosages);
  batch.missing_count.assign(n, 0);
  for (std::size_t m = 0; m < n; ++m) {
    const double* row = batch.dosages.row(static_cast<Eigen::Index>(m)).data();
    std::size_t miss = 0;
    for (std::size_t i = 0; i < n_samples(); ++i) miss += is_missing(row[i]) ? 1 : 0;
    batch.missing_count[m] = miss;
  }
  return batch;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(std::move(tok));
  return out;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<MarkerRecord> read_bim(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<MarkerRecord> out;
  std::string line;
  std::size_t lineno = 0, same_allele = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 6)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 6 columns, got " +
                        std::to_string(f.size()));
    MarkerRecord r;
    r.chrom = f[0];
    r.id = f[1];
    try {
      std::size_t used = 0;
      r.pos = std::stoull(f[3], &used);
      if (used != f[3].size() || f[3][0] == '-') throw std::invalid_argument("pos");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad position '" + f[3] + "'");
    }
    r.allele1 = f[4];
    r.allele2 = f[5];
    r.source_index = out.size();
    if (r.allele1 == r.allele2) ++same_allele;
    out.push_back(std::move(r));
  }
  if (same_allele > 0)
    log::warn(std::to_string(same_allele) + " marker(s) in " + path.string() + " have identical alleles");
  return out;
}

std::vector<std::string> read_fam_ids(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() < 2)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected at least 2 columns");
    ids.push_back(f[1]);
  }
  return ids;
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = split_ws(line);
    if (f.empty()) continue;
    ids.push_back(f.front());
  }
  return ids;
}

std::unique_ptr<GenotypeSource> open_genotype_source(const GenotypeSpec& spec) {
  switch (spec.format) {
    case GenotypeFormat::PlinkBed:
      return std::make_unique<detail::PlinkSource>(spec.bed, spec.bim, spec.fam);
    case GenotypeFormat::Bgen:
      return std::make_unique<detail::BgenSource>(spec.bgen, spec.sample_ids);
    case GenotypeFormat::Dense:
      if (spec.sample_ids.empty())
        throw Error("dense genotype input requires a sample-id sidecar (the array carries no IDs)");
      return std::make_unique<detail::DenseSource>(spec.dense, spec.sample_ids, spec.orientation);
  }
  throw Error("unknown genotype format");
}

}  // namespace panelgwas
