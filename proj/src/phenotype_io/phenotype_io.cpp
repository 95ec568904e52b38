#include "panelgwas/phenotype_io.hpp"

#include "panelgwas/log.hpp"

#include <charconv>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace panelgwas {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "-9";
}

Table Table::select(const std::vector<std::string>& names) const {
  Table t;
  t.ids = ids;
  t.values.resize(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = std::find(column_names.begin(), column_names.end(), names[j]);
    if (it == column_names.end()) throw Error("column '" + names[j] + "' not found");
    const auto src = static_cast<std::size_t>(it - column_names.begin());
    t.column_names.push_back(names[j]);
    t.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(src));
    t.missing_count.push_back(missing_count[src]);
  }
  return t;
}

Table load_table(const std::filesystem::path& path, const std::string& id_column, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file (header row required)");
  auto header = split(line, delimiter);
  for (auto& h : header) h = trim(h);
  const auto id_it = std::find(header.begin(), header.end(), id_column);
  if (id_it == header.end())
    throw FormatError(path.string() + ": ID column '" + id_column + "' not in header");
  const auto id_col = static_cast<std::size_t>(id_it - header.begin());

  Table t;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != id_col) t.column_names.push_back(header[j]);
  const std::size_t ncol = t.column_names.size();
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> bad_cells(ncol, 0);
  t.missing_count.assign(ncol, 0);
  std::unordered_set<std::string> seen;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line, delimiter);
    if (cells.size() != header.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    std::string id = trim(cells[id_col]);
    if (!seen.insert(id).second) throw FormatError(path.string() + ": duplicate sample ID '" + id + "'");
    std::vector<double> row;
    row.reserve(ncol);
    for (std::size_t j = 0, k = 0; j < cells.size(); ++j) {
      if (j == id_col) continue;
      const std::string cell = trim(cells[j]);
      double v = kMissing;
      if (is_missing_token(cell)) {
        ++t.missing_count[k];
      } else if (!parse_double(cell, v)) {
        v = kMissing;
        ++t.missing_count[k];
        ++bad_cells[k];
      }
      row.push_back(v);
      ++k;
    }
    t.ids.push_back(std::move(id));
    rows.push_back(std::move(row));
  }

  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncol));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncol; ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  for (std::size_t j = 0; j < ncol; ++j)
    if (bad_cells[j] > 0)
      log::warn(path.string() + ": column '" + t.column_names[j] + "' has " + std::to_string(bad_cells[j]) +
                " non-numeric cell(s), treated as missing");
  return t;
}

SampleAlignment align_samples(const std::vector<std::string>& genotype_ids, const Table& phenotypes,
                              const Table* covariates, const std::vector<std::string>* keep,
                              const std::vector<std::string>* remove) {
  auto index_of = [](const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> m;
    m.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], i);
    return m;
  };
  const auto pheno_index = index_of(phenotypes.ids);
  const auto covar_index = covariates ? index_of(covariates->ids) : decltype(pheno_index){};
  std::unordered_set<std::string> keep_set, remove_set;
  if (keep) keep_set.insert(keep->begin(), keep->end());
  if (remove) remove_set.insert(remove->begin(), remove->end());

  SampleAlignment a;
  auto& log = a.exclusion_log;
  std::unordered_set<std::string> geno_set;
  geno_set.reserve(genotype_ids.size());
  for (std::size_t g = 0; g < genotype_ids.size(); ++g) {
    const auto& id = genotype_ids[g];
    if (!geno_set.insert(id).second) throw FormatError("duplicate sample ID '" + id + "' in genotype samples");
    if (remove_set.count(id)) {
      ++log.remove_listed;
      continue;
    }
    if (keep && !keep_set.count(id)) {
      ++log.not_keep_listed;
      continue;
    }
    auto p = pheno_index.find(id);
    if (p == pheno_index.end()) {
      ++log.not_in_phenotypes;
      continue;
    }
    std::size_t crow = 0;
    if (covariates) {
      auto c = covar_index.find(id);
      if (c == covar_index.end()) {
        ++log.not_in_covariates;
        continue;
      }
      crow = c->second;
    }
    a.kept_sample_ids.push_back(id);
    a.genotype_row_index.push_back(g);
    a.phenotype_row_index.push_back(p->second);
    if (covariates) a.covariate_row_index.push_back(crow);
  }
  for (const auto& id : phenotypes.ids)
    if (!geno_set.count(id)) ++log.not_in_genotypes;

  if (a.n_kept() == 0) throw Error("sample alignment: empty intersection of genotype and table samples");
  if (a.n_kept() < 3)
    throw Error("sample alignment: only " + std::to_string(a.n_kept()) +
                " sample(s) kept; at least 3 are needed for N-2 degrees of freedom");
  return a;
}

PhenotypePanel build_panel(const Table& table, const std::vector<std::size_t>& row_index, MissingPolicy policy) {
  if (table.cols() == 0) throw Error("phenotype table has no phenotype columns");
  const auto n = static_cast<Eigen::Index>(row_index.size());
  const auto p = static_cast<Eigen::Index>(table.cols());
  PhenotypePanel panel;
  panel.names = table.column_names;
  panel.Y.resize(n, p);
  panel.missing_count.assign(table.cols(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = row_index[static_cast<std::size_t>(i)];
    if (r >= table.rows()) throw Error("build_panel: row index out of range");
    panel.Y.row(i) = table.values.row(static_cast<Eigen::Index>(r));
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    auto col = panel.Y.col(j);
    double sum = 0.0;
    std::size_t present = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!is_missing(col(i))) {
        sum += col(i);
        ++present;
      }
    const std::string& name = panel.names[static_cast<std::size_t>(j)];
    if (present == 0) throw Error("phenotype column entirely missing: '" + name + "'");
    const std::size_t missing = static_cast<std::size_t>(n) - present;
    panel.missing_count[static_cast<std::size_t>(j)] = missing;
    if (missing == 0) continue;
    if (policy == MissingPolicy::Fail)
      throw Error("phenotype '" + name + "' has " + std::to_string(missing) + " missing value(s)");
    const double mean = sum / static_cast<double>(present);
    for (Eigen::Index i = 0; i < n; ++i)
      if (is_missing(col(i))) col(i) = mean;
    log::warn("phenotype '" + name + "': mean-imputed " + std::to_string(missing) + " missing value(s)");
  }
  return panel;
}

Eigen::MatrixXd build_covariate_matrix(const Table& table, const std::vector<std::size_t>& row_index) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(row_index.size()), static_cast<Eigen::Index>(table.cols()));
  for (std::size_t i = 0; i < row_index.size(); ++i) {
    for (std::size_t j = 0; j < table.cols(); ++j) {
      const double v = table.values(static_cast<Eigen::Index>(row_index[i]), static_cast<Eigen::Index>(j));
      if (is_missing(v))
        throw Error("covariate '" + table.column_names[j] + "' is missing for sample '" +
                    table.ids[row_index[i]] + "'");
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return c;
}

}  // namespace panelgwas
