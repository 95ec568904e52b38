#include "panelgwas/engine.hpp"
#include "panelgwas/kernel.hpp"
#include "panelgwas/oracle.hpp"
#include "panelgwas/stats.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

namespace py = pybind11;
using namespace panelgwas;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Precision precision_of(const std::string& s) {
  if (s == "f64") return Precision::F64;
  if (s == "f32") return Precision::F32StoreF64Acc;
  throw Error("precision must be 'f32' or 'f64', got '" + s + "'");
}

DfMode df_mode_of(const std::string& s) {
  if (s == "n-2") return DfMode::NMinus2;
  if (s == "adjusted") return DfMode::Adjusted;
  throw Error("df_mode must be 'n-2' or 'adjusted', got '" + s + "'");
}

// In-memory scan of one genotype block against a phenotype panel; NaN marks missing dosages.
py::dict associate(const RowMat& genotypes, const Eigen::MatrixXd& phenotypes,
                   std::optional<Eigen::MatrixXd> covariates, const std::string& df_mode,
                   bool residualize_genotypes, const std::string& precision) {
  const auto n = phenotypes.rows();
  if (genotypes.cols() != n)
    throw Error("genotypes have " + std::to_string(genotypes.cols()) + " samples but phenotypes have " +
                std::to_string(n));
  if (phenotypes.hasNaN()) throw Error("phenotypes must not contain NaN");
  const Eigen::MatrixXd cov = covariates ? *covariates : Eigen::MatrixXd(n, 0);
  if (cov.rows() != n) throw Error("covariates must have one row per sample");
  if (cov.hasNaN()) throw Error("covariates must not contain NaN");

  const auto basis = build_covariate_basis(cov);
  const Eigen::VectorXd means = phenotypes.colwise().mean().transpose();
  const auto st = standardize_columns(residualize(phenotypes, basis), std::span<const double>(means.data(), means.size()));

  RawBatch raw;
  raw.dosages = genotypes;
  raw.markers.resize(static_cast<std::size_t>(genotypes.rows()));
  raw.missing_count.assign(raw.markers.size(), 0);
  const auto g = prepare_genotype_batch(raw, &basis, residualize_genotypes, precision_of(precision));

  const double df = df_mode_of(df_mode) == DfMode::NMinus2 ? static_cast<double>(n) - 2.0
                                                                 : static_cast<double>(n - basis.rank()) - 1.0;
  if (df < 1.0) throw Error("degrees of freedom < 1");
  auto stats = compute_stat_block(correlate(g, PackedPhenotypes(st.values)), df);

  std::vector<std::string> skip;
  for (std::size_t m = 0; m < g.qc.size(); ++m) {
    const bool marker_skipped = g.qc[m].skip != SkipReason::None;
    skip.push_back(marker_skipped ? to_string(g.qc[m].skip) : "");
    for (Eigen::Index j = 0; j < stats.R.cols(); ++j)
      if (marker_skipped || st.zero_variance[static_cast<std::size_t>(j)]) {
        const auto row = static_cast<Eigen::Index>(m);
        stats.R(row, j) = stats.T(row, j) = stats.P(row, j) = kMissing;
      }
  }
  std::vector<double> af;
  for (const auto& q : g.qc) af.push_back(q.allele_frequency);
  py::dict out;
  out["r"] = stats.R;
  out["t"] = stats.T;
  out["p"] = stats.P;
  out["df"] = df;
  out["skip"] = skip;
  out["allele_frequency"] = af;
  return out;
}

GenotypeSpec genotype_spec(const std::optional<std::string>& bfile, const std::optional<std::string>& bgen,
                           const std::optional<std::string>& dense, const std::optional<std::string>& sample_ids) {
  const int given = bfile.has_value() + bgen.has_value() + dense.has_value();
  if (given != 1) throw Error("exactly one of bfile, bgen, dense is required");
  GenotypeSpec spec;
  if (bfile) return GenotypeSpec::plink_prefix(*bfile);
  if (bgen) {
    spec.format = GenotypeFormat::Bgen;
    spec.bgen = *bgen;
  } else {
    spec.format = GenotypeFormat::Dense;
    spec.dense = *dense;
  }
  if (sample_ids) spec.sample_ids = *sample_ids;
  return spec;
}

py::dict summary_dict(const ScanSummary& s) {
  py::dict d;
  for (const auto& [k, v] : s.key_values()) d[py::str(k)] = v;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linear association scans for large phenotype panels";
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.attr("P_FLOOR") = kPFloor;
  m.def("t_from_r", py::vectorize(t_from_r), py::arg("r"), py::arg("df"), "t-statistic for correlation r");
  m.def("p_from_t", py::vectorize([](double t, double df) { return p_from_t(t, df); }), py::arg("t"), py::arg("df"),
        "two-sided Student-t p-value, floored at P_FLOOR");
  m.def("reg_inc_beta", py::overload_cast<double, double, double>(&reg_inc_beta), py::arg("a"), py::arg("b"),
        py::arg("x"), "regularized incomplete beta I_x(a, b)");

  m.def("associate", &associate, py::arg("genotypes"), py::arg("phenotypes"), py::arg("covariates") = py::none(),
        py::arg("df_mode") = "n-2", py::arg("residualize_genotypes") = false, py::arg("precision") = "f64",
        "association statistics for a markers x samples dosage matrix against a samples x phenotypes panel");

  m.def(
      "ols",
      [](std::vector<double> y, std::vector<double> g, std::optional<RowMat> covariates) {
        std::vector<double> c;
        std::size_t cols = 0;
        if (covariates) {
          c.assign(covariates->data(), covariates->data() + covariates->size());
          cols = static_cast<std::size_t>(covariates->cols());
        }
        const auto r = oracle::ols_single(y, g, {c, cols});
        py::dict d;
        d["beta"] = r.beta;
        d["se"] = r.se;
        d["t"] = r.t;
        d["p"] = r.p;
        d["df"] = r.df;
        return d;
      },
      py::arg("y"), py::arg("g"), py::arg("covariates") = py::none(), "least-squares reference for one pair");

  m.def(
      "scan",
      [](const std::string& pheno, const std::string& out, std::optional<std::string> bfile,
         std::optional<std::string> bgen, std::optional<std::string> dense, std::optional<std::string> sample_ids,
         std::optional<std::string> covar, const std::string& mode, double p_threshold, std::size_t top_k,
         std::size_t batch_size, const std::string& precision, const std::string& df_mode,
         bool residualize_genotypes, std::size_t threads, bool write_qc) {
        ScanConfig c;
        c.genotypes = genotype_spec(bfile, bgen, dense, sample_ids);
        c.phenotype_path = pheno;
        if (covar) c.covariate_path = *covar;
        c.output_path = out;
        if (mode == "threshold")
          c.output_mode = OutputMode::Threshold;
        else if (mode == "topk")
          c.output_mode = OutputMode::TopK;
        else if (mode == "full")
          c.output_mode = OutputMode::Full;
        else
          throw Error("mode must be 'threshold', 'topk' or 'full'");
        c.p_threshold = p_threshold;
        c.top_k = top_k;
        c.batch_size = batch_size;
        c.precision = precision_of(precision);
        c.df_mode = df_mode_of(df_mode);
        c.residualize_genotypes = residualize_genotypes;
        c.worker_count = threads;
        c.write_qc = write_qc;
        py::gil_scoped_release release;
        const auto s = run_scan(c);
        py::gil_scoped_acquire acquire;
        return summary_dict(s);
      },
      py::arg("pheno"), py::arg("out"), py::kw_only(), py::arg("bfile") = py::none(), py::arg("bgen") = py::none(),
      py::arg("dense") = py::none(), py::arg("sample_ids") = py::none(), py::arg("covar") = py::none(),
      py::arg("mode") = "threshold", py::arg("p_threshold") = 1e-4, py::arg("top_k") = 100,
      py::arg("batch_size") = 4096, py::arg("precision") = "f32", py::arg("df_mode") = "n-2",
      py::arg("residualize_genotypes") = false, py::arg("threads") = 1, py::arg("write_qc") = false,
      "run a file-based scan; returns the summary as a dict of strings");

  m.def(
      "read_results",
      [](const std::filesystem::path& path) {
        const auto recs = read_results(path);
        std::vector<std::string> id, pheno, chrom;
        std::vector<double> r, t, p, af;
        for (const auto& x : recs) {
          chrom.push_back(x.chrom);
          id.push_back(x.id);
          pheno.push_back(x.phenotype);
          r.push_back(x.r);
          t.push_back(x.t);
          p.push_back(x.p);
          af.push_back(x.allele_frequency);
        }
        py::dict d;
        d["CHR"] = chrom;
        d["ID"] = id;
        d["PHENO"] = pheno;
        d["AF"] = py::array(py::cast(af));
        d["R"] = py::array(py::cast(r));
        d["T"] = py::array(py::cast(t));
        d["P"] = py::array(py::cast(p));
        return d;
      },
      py::arg("path"), "columns of a threshold/top-k results file");

  m.def(
      "read_full_matrix",
      [](const std::filesystem::path& path) {
        const auto f = read_full_matrix(path);
        RowMat t = Eigen::Map<const RowMat>(f.values.data(), static_cast<Eigen::Index>(f.rows),
                                            static_cast<Eigen::Index>(f.cols));
        return t;
      },
      py::arg("path"), "t-statistic matrix written in full mode");

  m.def(
      "read_genotypes",
      [](std::optional<std::string> bfile, std::optional<std::string> bgen, std::optional<std::string> dense,
         std::optional<std::string> sample_ids, std::size_t start, std::optional<std::size_t> count) {
        auto src = open_genotype_source(genotype_spec(bfile, bgen, dense, sample_ids));
        const std::size_t n = count.value_or(src->n_markers() > start ? src->n_markers() - start : 0);
        auto batch = src->read_marker_batch(start, n);
        std::vector<std::string> ids;
        for (const auto& mk : batch.markers) ids.push_back(mk.id);
        return py::make_tuple(RowMat(std::move(batch.dosages)), ids, src->sample_ids());
      },
      py::kw_only(), py::arg("bfile") = py::none(), py::arg("bgen") = py::none(), py::arg("dense") = py::none(),
      py::arg("sample_ids") = py::none(), py::arg("start") = 0, py::arg("count") = py::none(),
      "(dosages markers x samples, marker ids, sample ids); NaN marks missing");

  m.def(
      "simulate",
      [](const std::filesystem::path& prefix, std::uint64_t seed, std::size_t n_samples, std::size_t n_markers,
         std::size_t n_phenotypes, std::size_t n_covariates, double causal_fraction, double effect_sd,
         double noise_sd, double genotype_missing_rate, double phenotype_missing_rate) {
        oracle::SimSpec s;
        s.seed = seed;
        s.n_samples = n_samples;
        s.n_markers = n_markers;
        s.n_phenotypes = n_phenotypes;
        s.n_covariates = n_covariates;
        s.causal_fraction = causal_fraction;
        s.effect_sd = effect_sd;
        s.noise_sd = noise_sd;
        s.genotype_missing_rate = genotype_missing_rate;
        s.phenotype_missing_rate = phenotype_missing_rate;
        s.validate();
        const auto c = oracle::simulate_cohort(s, prefix);
        py::dict d;
        d["bfile"] = c.prefix.string();
        d["pheno"] = c.phenotype_path.string();
        d["covar"] = c.covariate_path.empty() ? py::object(py::none()) : py::object(py::str(c.covariate_path.string()));
        d["truth"] = c.truth_path.string();
        return d;
      },
      py::arg("prefix"), py::kw_only(), py::arg("seed") = 1, py::arg("n_samples") = 1000, py::arg("n_markers") = 1000,
      py::arg("n_phenotypes") = 4, py::arg("n_covariates") = 0, py::arg("causal_fraction") = 0.0,
      py::arg("effect_sd") = 0.1, py::arg("noise_sd") = 1.0, py::arg("genotype_missing_rate") = 0.0,
      py::arg("phenotype_missing_rate") = 0.0, "write a simulated PLINK cohort; returns the file paths");
}
