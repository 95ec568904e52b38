#include "panelgwas/oracle.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace panelgwas::oracle {

std::vector<std::uint8_t> encode_bed_row(std::span<const double> dosages) {
  std::vector<std::uint8_t> out((dosages.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < dosages.size(); ++i) {
    const double d = dosages[i];
    std::uint8_t code;
    if (is_missing(d))
      code = 0b01;
    else if (d == 2.0)
      code = 0b00;
    else if (d == 1.0)
      code = 0b10;
    else if (d == 0.0)
      code = 0b11;
    else
      throw Error("encode_bed_row: dosage " + std::to_string(d) + " is not a hard call");
    out[i / 4] |= static_cast<std::uint8_t>(code << (2 * (i % 4)));
  }
  return out;
}

void write_plink(const std::filesystem::path& prefix, const std::vector<MarkerRecord>& markers,
                 const std::vector<std::string>& sample_ids, const RowMatrixXd& dosages) {
  if (static_cast<std::size_t>(dosages.rows()) != markers.size() ||
      static_cast<std::size_t>(dosages.cols()) != sample_ids.size())
    throw Error("write_plink: dosage shape does not match markers x samples");
  const std::string p = prefix.string();
  std::ofstream bed(p + ".bed", std::ios::binary | std::ios::trunc);
  std::ofstream bim(p + ".bim", std::ios::trunc);
  std::ofstream fam(p + ".fam", std::ios::trunc);
  if (!bed || !bim || !fam) throw Error("cannot write PLINK fileset " + p);
  const char magic[3] = {0x6C, 0x1B, 0x01};
  bed.write(magic, 3);
  for (Eigen::Index m = 0; m < dosages.rows(); ++m) {
    const auto bytes = encode_bed_row(std::span(dosages.row(m).data(), sample_ids.size()));
    bed.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  for (const auto& m : markers)
    bim << m.chrom << '\t' << m.id << "\t0\t" << m.pos << '\t' << m.allele1 << '\t' << m.allele2 << '\n';
  for (const auto& id : sample_ids) fam << id << ' ' << id << " 0 0 0 -9\n";
  if (!bed || !bim || !fam) throw Error("write failure on PLINK fileset " + p);
}

void SimSpec::validate() const {
  if (n_samples < 1 || n_markers < 1 || n_phenotypes < 1) throw Error("simulation counts must be at least 1");
  if (!(causal_fraction >= 0.0 && causal_fraction <= 1.0)) throw Error("causal fraction must be in [0, 1]");
  if (!(genotype_missing_rate >= 0.0 && genotype_missing_rate < 1.0) ||
      !(phenotype_missing_rate >= 0.0 && phenotype_missing_rate < 1.0))
    throw Error("missing rates must be in [0, 1)");
  if (!(af_min > 0.0 && af_min <= af_max && af_max < 1.0)) throw Error("allele-frequency range must lie in (0, 1)");
  if (!(effect_sd >= 0.0) || !(noise_sd >= 0.0) || !(covariate_effect_sd >= 0.0))
    throw Error("standard deviations must be non-negative");
}

SimulatedCohort simulate_cohort(const SimSpec& spec, const std::filesystem::path& prefix) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.n_samples, m_count = spec.n_markers, p_count = spec.n_phenotypes, c = spec.n_covariates;

  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "S" + std::to_string(i + 1);

  RowMatrixXd genotypes(static_cast<Eigen::Index>(m_count), static_cast<Eigen::Index>(n));
  RowMatrixXd observed(genotypes.rows(), genotypes.cols());
  std::vector<MarkerRecord> markers(m_count);
  static const char* kAlleles[][2] = {{"A", "G"}, {"C", "T"}, {"A", "C"}, {"G", "T"}};
  for (std::size_t m = 0; m < m_count; ++m) {
    const double af = spec.af_min + (spec.af_max - spec.af_min) * unif(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = (unif(rng) < af ? 1.0 : 0.0) + (unif(rng) < af ? 1.0 : 0.0);
      genotypes(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = g;
      const bool miss = spec.genotype_missing_rate > 0.0 && unif(rng) < spec.genotype_missing_rate;
      observed(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = miss ? kMissing : g;
    }
    auto& rec = markers[m];
    rec.chrom = "1";
    rec.id = "rs" + std::to_string(m + 1);
    rec.pos = 1000 * (m + 1);
    rec.allele1 = kAlleles[m % 4][0];
    rec.allele2 = kAlleles[m % 4][1];
    rec.source_index = m;
  }

  Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < cov.cols(); ++j) cov(i, j) = normal(rng);

  SimulatedCohort out;
  out.prefix = prefix;
  out.causal_per_phenotype = static_cast<std::size_t>(std::llround(spec.causal_fraction * static_cast<double>(m_count)));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p_count));
  std::ofstream truth(prefix.string() + ".truth.tsv", std::ios::trunc);
  if (!truth) throw Error("cannot write simulation output under " + prefix.string());
  truth << "MARKER\tPHENO\tBETA\n";
  std::vector<std::size_t> order(m_count);
  for (std::size_t j = 0; j < p_count; ++j) {
    const std::string name = "pheno" + std::to_string(j + 1);
    auto col = y.col(static_cast<Eigen::Index>(j));
    for (Eigen::Index i = 0; i < col.size(); ++i) col(i) = spec.noise_sd * normal(rng);
    for (std::size_t k = 0; k < c; ++k) col += spec.covariate_effect_sd * normal(rng) * cov.col(static_cast<Eigen::Index>(k));
    // Partial Fisher-Yates draw of the causal markers for this phenotype.
    for (std::size_t m = 0; m < m_count; ++m) order[m] = m;
    for (std::size_t k = 0; k < out.causal_per_phenotype; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, m_count - 1);
      std::swap(order[k], order[pick(rng)]);
      const std::size_t m = order[k];
      const double beta = (unif(rng) < 0.5 ? -1.0 : 1.0) * spec.effect_sd;
      col += beta * genotypes.row(static_cast<Eigen::Index>(m)).transpose();
      truth << markers[m].id << '\t' << name << '\t' << format_double(beta) << '\n';
    }
  }

  write_plink(prefix, markers, ids, observed);

  out.phenotype_path = prefix.string() + ".pheno.tsv";
  std::ofstream ph(out.phenotype_path, std::ios::trunc);
  ph << "IID";
  for (std::size_t j = 0; j < p_count; ++j) ph << "\tpheno" << j + 1;
  ph << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    ph << ids[i];
    for (std::size_t j = 0; j < p_count; ++j) {
      const bool miss = spec.phenotype_missing_rate > 0.0 && unif(rng) < spec.phenotype_missing_rate;
      ph << '\t' << (miss ? std::string("NA") : format_double(y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
    ph << '\n';
  }
  if (!ph) throw Error("write failure on " + out.phenotype_path.string());

  if (c > 0) {
    out.covariate_path = prefix.string() + ".covar.tsv";
    std::ofstream cv(out.covariate_path, std::ios::trunc);
    cv << "IID";
    for (std::size_t k = 0; k < c; ++k) cv << "\tcov" << k + 1;
    cv << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      cv << ids[i];
      for (std::size_t k = 0; k < c; ++k) cv << '\t' << format_double(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      cv << '\n';
    }
    if (!cv) throw Error("write failure on " + out.covariate_path.string());
  }
  out.truth_path = prefix.string() + ".truth.tsv";
  return out;
}

}  // namespace panelgwas::oracle
