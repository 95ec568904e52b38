#include "panelgwas/phenotype_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace panelgwas;
using namespace testing_support;

namespace {

Table table_of(std::vector<std::string> ids, std::vector<std::string> names, Eigen::MatrixXd v) {
  Table t;
  t.ids = std::move(ids);
  t.column_names = std::move(names);
  t.missing_count.assign(t.column_names.size(), 0);
  t.values = std::move(v);
  return t;
}

Table ids_only(std::vector<std::string> ids) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(ids.size()), 1);
  return table_of(std::move(ids), {"y"}, v);
}

}  // namespace

TEST(LoadTable, BasicShape) {
  TempDir tmp;
  write_text(tmp / "p.tsv", "IID\tph1\tph2\nS1\t1.5\t2\nS2\t3\t-1e3\nS3\t0\t7\n");
  const auto t = load_table(tmp / "p.tsv");
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.cols(), 2u);
  EXPECT_EQ(t.column_names, (std::vector<std::string>{"ph1", "ph2"}));
  EXPECT_EQ(t.values(1, 1), -1000.0);
}

TEST(LoadTable, MissingTokensBecomeNaN) {
  TempDir tmp;
  write_text(tmp / "p.tsv", "FID\tIID\tph\nF\tS1\tNA\nF\tS2\t\nF\tS3\tnan\nF\tS4\t-9\nF\tS5\tNaN\nF\tS6\t2\n");
  const auto t = load_table(tmp / "p.tsv");
  ASSERT_EQ(t.cols(), 2u);  // FID is parsed as a (non-numeric) column
  const Eigen::Index ph = 1;
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_TRUE(std::isnan(t.values(i, ph))) << i;
  EXPECT_EQ(t.values(5, ph), 2.0);
  EXPECT_EQ(t.missing_count[1], 5u);
}

TEST(LoadTable, NonNumericCellIsMissing) {
  TempDir tmp;
  write_text(tmp / "p.tsv", "IID\tph\nS1\tabc\nS2\t1\n");
  const auto t = load_table(tmp / "p.tsv");
  EXPECT_TRUE(std::isnan(t.values(0, 0)));
  EXPECT_EQ(t.missing_count[0], 1u);
}

TEST(LoadTable, Errors) {
  TempDir tmp;
  write_text(tmp / "dup.tsv", "IID\tph\nS1\t1\nS1\t2\n");
  try {
    load_table(tmp / "dup.tsv");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("S1"), std::string::npos);
  }
  write_text(tmp / "ragged.tsv", "IID\tph\tq\nS1\t1\nS2\t2\t3\n");
  EXPECT_THROW(load_table(tmp / "ragged.tsv"), FormatError);
  write_text(tmp / "noid.tsv", "ID\tph\nS1\t1\n");
  EXPECT_THROW(load_table(tmp / "noid.tsv"), FormatError);
  EXPECT_THROW(load_table(tmp / "absent.tsv"), Error);
}

TEST(LoadTable, CommaDelimiterAndCustomId) {
  TempDir tmp;
  write_text(tmp / "p.csv", "sample,a,b\nx,1,2\ny,3,4\n");
  const auto t = load_table(tmp / "p.csv", "sample", ',');
  EXPECT_EQ(t.ids, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.values(1, 0), 3.0);
}

TEST(AlignSamples, IntersectionInGenotypeOrder) {
  const auto a = align_samples({"S1", "S2", "S3", "S4"}, ids_only({"S3", "S1", "S4"}));
  EXPECT_EQ(a.kept_sample_ids, (std::vector<std::string>{"S1", "S3", "S4"}));
  EXPECT_EQ(a.genotype_row_index, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(a.phenotype_row_index, (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(a.exclusion_log.not_in_phenotypes, 1u);
}

TEST(AlignSamples, TooFewSamplesFatal) {
  EXPECT_THROW(align_samples({"S1", "S2", "S3"}, ids_only({"S3", "S1"})), Error);
  EXPECT_THROW(align_samples({"S1", "S2"}, ids_only({"X"})), Error);
}

TEST(AlignSamples, RemoveListDropsOne) {
  const std::vector<std::string> g = {"S1", "S2", "S3", "S4", "S5"};
  const std::vector<std::string> remove = {"S1"};
  const auto a = align_samples(g, ids_only(g), nullptr, nullptr, &remove);
  EXPECT_EQ(a.n_kept(), 4u);
  EXPECT_EQ(a.exclusion_log.remove_listed, 1u);
}

TEST(AlignSamples, RemoveWinsOverKeep) {
  const std::vector<std::string> g = {"S1", "S2", "S3", "S4", "S5"};
  const std::vector<std::string> keep = {"S1", "S2", "S3", "S4"}, remove = {"S2"};
  const auto a = align_samples(g, ids_only(g), nullptr, &keep, &remove);
  EXPECT_EQ(a.kept_sample_ids, (std::vector<std::string>{"S1", "S3", "S4"}));
  EXPECT_EQ(a.exclusion_log.remove_listed, 1u);
  EXPECT_EQ(a.exclusion_log.not_keep_listed, 1u);
}

TEST(AlignSamples, ExclusionLogAccountsForEveryGenotypeSample) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = make_ids(20 + rng() % 20);
    std::vector<std::string> ph, cv, keep, remove;
    for (const auto& id : g) {
      if (rng() % 5) ph.push_back(id);
      if (rng() % 6) cv.push_back(id);
      if (rng() % 4) keep.push_back(id);
      if (rng() % 7 == 0) remove.push_back(id);
    }
    ph.push_back("ghost");
    std::shuffle(ph.begin(), ph.end(), rng);
    const auto pt = ids_only(ph), ct = ids_only(cv);
    SampleAlignment a;
    try {
      a = align_samples(g, pt, &ct, &keep, &remove);
    } catch (const Error&) {
      continue;
    }
    EXPECT_EQ(a.exclusion_log.dropped_genotype_samples() + a.n_kept(), g.size());
    EXPECT_EQ(a.exclusion_log.not_in_genotypes, 1u);
    EXPECT_EQ(a.genotype_row_index.size(), a.n_kept());
    EXPECT_EQ(a.phenotype_row_index.size(), a.n_kept());
    EXPECT_EQ(a.covariate_row_index.size(), a.n_kept());
    EXPECT_TRUE(std::is_sorted(a.genotype_row_index.begin(), a.genotype_row_index.end()));
    for (std::size_t k = 0; k < a.n_kept(); ++k) {
      EXPECT_EQ(g[a.genotype_row_index[k]], a.kept_sample_ids[k]);
      EXPECT_EQ(pt.ids[a.phenotype_row_index[k]], a.kept_sample_ids[k]);
      EXPECT_EQ(ct.ids[a.covariate_row_index[k]], a.kept_sample_ids[k]);
    }
  }
}

TEST(AlignSamples, Idempotent) {
  const std::vector<std::string> g = {"S1", "S2", "S3", "S4", "S5", "S6"};
  const auto pt = ids_only({"S6", "S2", "S3", "S1", "S5"});
  const auto a = align_samples(g, pt);
  const auto b = align_samples(a.kept_sample_ids, pt);
  EXPECT_EQ(a.kept_sample_ids, b.kept_sample_ids);
  EXPECT_EQ(a.phenotype_row_index, b.phenotype_row_index);
  EXPECT_EQ(b, align_samples(b.kept_sample_ids, pt));
}

TEST(BuildPanel, MeanImpute) {
  Eigen::MatrixXd v(3, 1);
  v << 1, kMissing, 3;
  const auto t = table_of({"a", "b", "c"}, {"y"}, v);
  const auto p = build_panel(t, {0, 1, 2}, MissingPolicy::MeanImpute);
  EXPECT_EQ(p.Y(1, 0), 2.0);
  EXPECT_EQ(p.missing_count[0], 1u);
  EXPECT_EQ(p.state, PanelState::Raw);
}

TEST(BuildPanel, FailPolicy) {
  Eigen::MatrixXd v(3, 1);
  v << 1, 2, 3;
  auto t = table_of({"a", "b", "c"}, {"y"}, v);
  const auto p = build_panel(t, {0, 1, 2}, MissingPolicy::Fail);
  EXPECT_EQ(p.Y, v);
  t.values(2, 0) = kMissing;
  EXPECT_THROW(build_panel(t, {0, 1, 2}, MissingPolicy::Fail), Error);
}

TEST(BuildPanel, AllMissingColumnFatal) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(3, 1, kMissing);
  const auto t = table_of({"a", "b", "c"}, {"y"}, v);
  for (auto pol : {MissingPolicy::Fail, MissingPolicy::MeanImpute}) {
    try {
      build_panel(t, {0, 1, 2}, pol);
      FAIL();
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find("phenotype column entirely missing"), std::string::npos);
    }
  }
}

TEST(BuildPanel, TableRowPermutationLeavesPanelUnchanged) {
  TempDir tmp;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const auto g = make_ids(12);
  Eigen::MatrixXd v(12, 3);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = nd(rng);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> pids(12);
  Eigen::MatrixXd pv(12, 3);
  for (std::size_t i = 0; i < 12; ++i) {
    pids[i] = g[perm[i]];
    pv.row(static_cast<Eigen::Index>(i)) = v.row(static_cast<Eigen::Index>(perm[i]));
  }
  const auto t1 = table_of(g, {"a", "b", "c"}, v), t2 = table_of(pids, {"a", "b", "c"}, pv);
  const auto p1 = build_panel(t1, align_samples(g, t1).phenotype_row_index);
  const auto p2 = build_panel(t2, align_samples(g, t2).phenotype_row_index);
  EXPECT_EQ(p1.Y, p2.Y);
}

TEST(CovariateMatrix, MissingCellFatal) {
  Eigen::MatrixXd v(3, 2);
  v << 1, 2, 3, kMissing, 5, 6;
  const auto t = table_of({"a", "b", "c"}, {"c1", "c2"}, v);
  EXPECT_THROW(build_covariate_matrix(t, {0, 1, 2}), Error);
  EXPECT_NO_THROW(build_covariate_matrix(t, {0, 2}));
}
