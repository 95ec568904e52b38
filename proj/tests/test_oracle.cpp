#include "panelgwas/oracle.hpp"
#include "panelgwas/stats.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

using namespace panelgwas;
using namespace panelgwas::oracle;
using namespace testing_support;

TEST(OlsSingle, PerfectFitIsInfiniteT) {
  const std::vector<double> g = {0, 1, 2, 1, 0, 2};
  const auto r = ols_single(g, g);
  EXPECT_NEAR(r.beta, 1.0, 1e-12);
  EXPECT_EQ(r.t, std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.p, kPFloor);
}

TEST(OlsSingle, OrthogonalGivesZero) {
  const std::vector<double> g = {0, 1, 2, 0, 1, 2};
  const std::vector<double> y = {1, -2, 1, 1, -2, 1};
  const auto r = ols_single(y, g);
  EXPECT_NEAR(r.beta, 0.0, 1e-15);
  EXPECT_NEAR(r.t, 0.0, 1e-14);
  EXPECT_NEAR(r.p, 1.0, 1e-14);
}

TEST(OlsSingle, SmallWorkedExample) {
  const std::vector<double> g = {0, 1, 2, 1}, y = {0, 1, 1, 2};
  const auto r = ols_single(y, g);
  EXPECT_NEAR(r.t, std::sqrt(2.0 / 3.0), 1e-14);
  EXPECT_NEAR(r.p, 0.5, 1e-14);
  EXPECT_EQ(r.df, 2.0);
}

TEST(OlsSingle, SimpleRegressionClosedForm) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5 + rng() % 60;
    std::vector<double> g(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<double>(rng() % 3);
      y[i] = 0.3 * g[i] + nd(rng);
    }
    g[0] = 0;
    g[1] = 2;
    double gm = 0, ym = 0;
    for (std::size_t i = 0; i < n; ++i) gm += g[i], ym += y[i];
    gm /= n;
    ym /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (g[i] - gm) * (g[i] - gm);
      sxy += (g[i] - gm) * (y[i] - ym);
      syy += (y[i] - ym) * (y[i] - ym);
    }
    const double beta = sxy / sxx;
    const double sse = syy - beta * sxy;
    const double se = std::sqrt(sse / (n - 2) / sxx);
    const auto r = ols_single(y, g);
    EXPECT_NEAR(r.beta, beta, 1e-12 * std::max(1.0, std::fabs(beta)));
    EXPECT_NEAR(r.se, se, 1e-12 * std::max(1.0, se));
    EXPECT_NEAR(r.t, beta / se, 1e-12 * std::max(1.0, std::fabs(beta / se)));
    EXPECT_EQ(r.df, static_cast<double>(n - 2));
  }
}

TEST(OlsSingle, CovariateDfAndExplicitDf) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  const std::size_t n = 40;
  std::vector<double> g(n), y(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = nd(rng);
    g[i] = static_cast<double>(rng() % 3) + 0.2 * c[i];
    y[i] = 0.5 * g[i] - c[i] + nd(rng);
  }
  const auto r = ols_single(y, g, {c, 1});
  EXPECT_EQ(r.df, static_cast<double>(n - 3));
  EXPECT_NEAR(r.t, r.beta / r.se, 1e-12);
  // The explicit df also sets the residual variance estimate.
  const auto r2 = ols_single_with_df(y, g, {c, 1}, 10.0);
  EXPECT_NEAR(r2.t, r.t * std::sqrt(10.0 / (n - 3)), 1e-12);
  EXPECT_EQ(r2.df, 10.0);
  EXPECT_EQ(r2.p, p_from_t(r2.t, 10.0));
}

TEST(OlsSingle, RankDeficientIsError) {
  const std::vector<double> g = {1, 1, 1, 1, 1};
  const std::vector<double> y = {1, 2, 3, 4, 5};
  EXPECT_THROW(ols_single(y, g), Error);
  const std::vector<double> g2 = {0, 1, 2, 1, 0}, c = {0, 2, 4, 2, 0};
  EXPECT_THROW(ols_single(y, g2, {c, 1}), Error);
  EXPECT_THROW(ols_single(std::vector<double>{1, 2}, std::vector<double>{0, 1}), Error);
}

TEST(EncodeBedRow, KnownBytes) {
  EXPECT_EQ(encode_bed_row(std::vector<double>{2, 1, kMissing, 0}), (std::vector<std::uint8_t>{0xD8}));
  EXPECT_EQ(encode_bed_row(std::vector<double>{0, 1, kMissing, 2, 1}), (std::vector<std::uint8_t>{0x1B, 0x02}));
  EXPECT_THROW(encode_bed_row(std::vector<double>{0.5}), Error);
}

TEST(SimSpecValidate, Ranges) {
  SimSpec s;
  EXPECT_NO_THROW(s.validate());
  auto bad = s;
  bad.n_markers = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = s;
  bad.genotype_missing_rate = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = s;
  bad.af_min = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = s;
  bad.af_max = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(SimulateCohort, DeterministicForSeed) {
  TempDir tmp;
  SimSpec s;
  s.seed = 7;
  s.n_samples = 60;
  s.n_markers = 30;
  s.n_phenotypes = 3;
  s.n_covariates = 2;
  s.causal_fraction = 0.1;
  s.genotype_missing_rate = 0.05;
  s.phenotype_missing_rate = 0.05;
  const auto a = simulate_cohort(s, tmp / "a");
  const auto b = simulate_cohort(s, tmp / "b");
  for (const char* ext : {".bed", ".bim", ".fam", ".pheno.tsv", ".covar.tsv", ".truth.tsv"})
    EXPECT_EQ(read_file(tmp / (std::string("a") + ext)), read_file(tmp / (std::string("b") + ext))) << ext;
  EXPECT_EQ(a.causal_per_phenotype, 3u);
  s.seed = 8;
  simulate_cohort(s, tmp / "c");
  EXPECT_NE(read_file(tmp / "a.bed"), read_file(tmp / "c.bed"));
}

TEST(SimulateCohort, NoMissingValuesWhenRatesZero) {
  TempDir tmp;
  SimSpec s;
  s.n_samples = 80;
  s.n_markers = 40;
  s.n_phenotypes = 2;
  s.n_covariates = 1;
  const auto c = simulate_cohort(s, tmp / "s");
  EXPECT_EQ(read_file(c.phenotype_path).find("NA"), std::string::npos);
  EXPECT_EQ(read_file(c.covariate_path).find("NA"), std::string::npos);
  auto src = open_genotype_source(GenotypeSpec::plink_prefix(c.prefix.string()));
  const auto batch = src->read_marker_batch(0, src->n_markers());
  for (auto m : batch.missing_count) EXPECT_EQ(m, 0u);
  for (Eigen::Index i = 0; i < batch.dosages.size(); ++i) {
    const double v = batch.dosages.data()[i];
    EXPECT_TRUE(v == 0 || v == 1 || v == 2);
  }
}

TEST(SimulateCohort, TruthTableShape) {
  TempDir tmp;
  SimSpec s;
  s.n_samples = 50;
  s.n_markers = 20;
  s.n_phenotypes = 3;
  s.causal_fraction = 0.25;
  const auto c = simulate_cohort(s, tmp / "s");
  std::istringstream in(read_file(c.truth_path));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "MARKER\tPHENO\tBETA");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3u * 5u);
}

TEST(Concordance, SelfComparisonIsPerfect) {
  std::vector<KeyedStat> a;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    const double t = 3 * nd(rng);
    a.push_back({"m" + std::to_string(i), "y", t, p_from_t(t, 30)});
  }
  auto b = a;
  std::reverse(b.begin(), b.end());
  const auto r = concordance_report(a, b);
  EXPECT_EQ(r.pairs, 50u);
  EXPECT_NEAR(r.pearson_neglog10p, 1.0, 1e-15);
  EXPECT_EQ(r.max_abs_dt, 0.0);
  EXPECT_EQ(r.sign_agreement, 1.0);
  EXPECT_LE(r.worst.size(), 10u);
  EXPECT_NE(r.to_text().find("pearson r (-log10 p):      1\n"), std::string::npos);
  EXPECT_EQ(r.key_values().at(1), (std::pair<std::string, std::string>{"pearson_neglog10p", "1"}));
}

TEST(Concordance, KeyMismatchIsError) {
  const std::vector<KeyedStat> a = {{"m1", "y", 1, 0.3}, {"m2", "y", 2, 0.05}};
  std::vector<KeyedStat> b = {{"m1", "y", 1, 0.3}, {"m3", "y", 2, 0.05}};
  EXPECT_THROW(concordance_report(a, b), Error);
  b.pop_back();
  EXPECT_THROW(concordance_report(a, b), Error);
  EXPECT_THROW(concordance_report({}, {}), Error);
  const std::vector<KeyedStat> dup = {{"m1", "y", 1, 0.3}, {"m1", "y", 2, 0.05}};
  EXPECT_THROW(concordance_report(dup, dup), Error);
}

TEST(Concordance, DetectsSignFlipAndWorstPairs) {
  std::vector<KeyedStat> a, b;
  for (int i = 0; i < 20; ++i) {
    const double t = 0.5 + i * 0.3;
    a.push_back({"m" + std::to_string(i), "y", t, p_from_t(t, 50)});
    b.push_back(a.back());
  }
  b[4].t = -b[4].t;
  b[7].p = 1e-20;
  const auto r = concordance_report(a, b);
  EXPECT_NEAR(r.sign_agreement, 19.0 / 20.0, 1e-15);
  EXPECT_NEAR(r.max_abs_dt, 2 * a[4].t, 1e-15);
  ASSERT_FALSE(r.worst.empty());
  EXPECT_EQ(r.worst.front().marker, "m7");
  EXPECT_LT(r.pearson_neglog10p, 0.9);
}

TEST(OracleScan, AgreesWithEngineUnderFwl) {
  TempDir tmp;
  SimSpec s;
  s.seed = 4;
  s.n_samples = 150;
  s.n_markers = 60;
  s.n_phenotypes = 4;
  s.n_covariates = 2;
  s.causal_fraction = 0.05;
  s.genotype_missing_rate = 0.02;
  const auto c = simulate_cohort(s, tmp / "s");
  ScanConfig cfg;
  cfg.genotypes = GenotypeSpec::plink_prefix(c.prefix.string());
  cfg.phenotype_path = c.phenotype_path;
  cfg.covariate_path = c.covariate_path;
  cfg.output_path = tmp / "o.tsv";
  cfg.p_threshold = 1.0;
  cfg.precision = Precision::F64;
  cfg.df_mode = DfMode::Adjusted;
  cfg.residualize_genotypes = true;
  run_scan(cfg);
  const auto rep = concordance_report(keyed(read_results(cfg.output_path)), oracle_scan(cfg));
  EXPECT_EQ(rep.pairs, 60u * 4u);
  EXPECT_LE(rep.max_abs_dt, 1e-6);
  EXPECT_EQ(rep.sign_agreement, 1.0);
}

TEST(OracleScan, NullCalibrationRoughlyNominal) {
  TempDir tmp;
  SimSpec s;
  s.seed = 21;
  s.n_samples = 300;
  s.n_markers = 500;
  s.n_phenotypes = 4;
  const auto c = simulate_cohort(s, tmp / "s");
  ScanConfig cfg;
  cfg.genotypes = GenotypeSpec::plink_prefix(c.prefix.string());
  cfg.phenotype_path = c.phenotype_path;
  const auto stats = oracle_scan(cfg);
  std::size_t hits = 0;
  for (const auto& k : stats) hits += k.p < 0.05;
  const double n = static_cast<double>(stats.size());
  const double sd = std::sqrt(0.05 * 0.95 / n);
  EXPECT_NEAR(hits / n, 0.05, 4 * sd);
}

TEST(TruthRecovery, StrongEffectsAllInTopK) {
  TempDir tmp;
  SimSpec s;
  s.seed = 33;
  s.n_samples = 400;
  s.n_markers = 200;
  s.n_phenotypes = 3;
  s.causal_fraction = 0.02;
  s.effect_sd = 2.0;
  s.noise_sd = 0.2;
  s.af_min = 0.2;
  const auto c = simulate_cohort(s, tmp / "s");
  ScanConfig cfg;
  cfg.genotypes = GenotypeSpec::plink_prefix(c.prefix.string());
  cfg.phenotype_path = c.phenotype_path;
  cfg.output_path = tmp / "top.tsv";
  cfg.output_mode = OutputMode::TopK;
  cfg.top_k = c.causal_per_phenotype;
  run_scan(cfg);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& r : read_results(cfg.output_path)) got.emplace(r.id, r.phenotype);
  std::istringstream in(read_file(c.truth_path));
  std::string line;
  std::getline(in, line);
  std::size_t causal = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string m, p;
    f >> m >> p;
    EXPECT_TRUE(got.count({m, p})) << m << ' ' << p;
    ++causal;
  }
  EXPECT_EQ(causal, 3u * 4u);
}
