#include "panelgwas/oracle.hpp"

#include "panelgwas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace panelgwas::oracle {

namespace {

double neglog10(double p) { return -std::log10(std::max(p, kPFloor)); }

std::string key_of(const std::string& marker, const std::string& phenotype) { return marker + '\x1f' + phenotype; }

double dt(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  return std::fabs(a - b);
}

}  // namespace

std::vector<KeyedStat> keyed(const std::vector<AssocRecord>& records) {
  std::vector<KeyedStat> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.id, r.phenotype, r.t, r.p});
  return out;
}

ConcordanceReport concordance_report(const std::vector<KeyedStat>& engine, const std::vector<KeyedStat>& oracle) {
  std::map<std::string, const KeyedStat*> by_key;
  for (const auto& s : oracle)
    if (!by_key.emplace(key_of(s.marker, s.phenotype), &s).second)
      throw Error("concordance: duplicate oracle key " + s.marker + "/" + s.phenotype);
  if (engine.size() != oracle.size())
    throw Error("concordance: engine has " + std::to_string(engine.size()) + " pairs, oracle has " +
                std::to_string(oracle.size()));
  if (engine.empty()) throw Error("concordance: no pairs to compare");

  std::vector<PairDiff> diffs;
  diffs.reserve(engine.size());
  std::map<std::string, bool> seen;
  for (const auto& e : engine) {
    const auto k = key_of(e.marker, e.phenotype);
    auto it = by_key.find(k);
    if (it == by_key.end()) throw Error("concordance: key " + e.marker + "/" + e.phenotype + " missing from oracle");
    if (!seen.emplace(k, true).second) throw Error("concordance: duplicate engine key " + e.marker + "/" + e.phenotype);
    const KeyedStat& o = *it->second;
    diffs.push_back({e.marker, e.phenotype, neglog10(e.p), neglog10(o.p), e.t, o.t});
  }

  ConcordanceReport rep;
  rep.pairs = diffs.size();
  double ma = 0, mb = 0;
  std::size_t agree = 0;
  for (const auto& d : diffs) {
    ma += d.neglog10p_a;
    mb += d.neglog10p_b;
    rep.max_abs_dt = std::max(rep.max_abs_dt, dt(d.t_a, d.t_b));
    const int sa = (d.t_a > 0) - (d.t_a < 0), sb = (d.t_b > 0) - (d.t_b < 0);
    agree += sa == sb ? 1 : 0;
  }
  const double n = static_cast<double>(diffs.size());
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (const auto& d : diffs) {
    const double a = d.neglog10p_a - ma, b = d.neglog10p_b - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (saa == 0.0 && sbb == 0.0)
    rep.pearson_neglog10p = 1.0;  // both sides constant and equal means identical
  else if (saa == 0.0 || sbb == 0.0)
    rep.pearson_neglog10p = 0.0;
  else
    rep.pearson_neglog10p = sab / std::sqrt(saa * sbb);
  rep.sign_agreement = static_cast<double>(agree) / n;

  std::stable_sort(diffs.begin(), diffs.end(), [](const PairDiff& x, const PairDiff& y) {
    return std::fabs(x.neglog10p_a - x.neglog10p_b) > std::fabs(y.neglog10p_a - y.neglog10p_b);
  });
  diffs.resize(std::min<std::size_t>(10, diffs.size()));
  rep.worst = std::move(diffs);
  return rep;
}

std::string ConcordanceReport::to_text() const {
  std::ostringstream os;
  os << "pairs compared:            " << pairs << '\n'
     << "pearson r (-log10 p):      " << format_double(pearson_neglog10p) << '\n'
     << "max |delta t|:             " << format_double(max_abs_dt) << '\n'
     << "sign agreement:            " << format_double(sign_agreement) << '\n';
  if (!worst.empty()) {
    os << "worst pairs (marker, phenotype, -log10p engine, -log10p oracle, t engine, t oracle):\n";
    for (const auto& d : worst)
      os << "  " << d.marker << '\t' << d.phenotype << '\t' << format_double(d.neglog10p_a) << '\t'
         << format_double(d.neglog10p_b) << '\t' << format_double(d.t_a) << '\t' << format_double(d.t_b) << '\n';
  }
  return os.str();
}

std::vector<std::pair<std::string, std::string>> ConcordanceReport::key_values() const {
  return {{"pairs", std::to_string(pairs)},
          {"pearson_neglog10p", format_double(pearson_neglog10p)},
          {"max_abs_dt", format_double(max_abs_dt)},
          {"sign_agreement", format_double(sign_agreement)}};
}

std::vector<KeyedStat> oracle_scan(const ScanConfig& config) {
  ScanInputs in = load_scan_inputs(config);
  const std::size_t n = in.alignment.n_kept();
  const std::size_t c = static_cast<std::size_t>(in.covariates.cols());

  std::vector<double> cov(n * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      cov[i * c + j] = in.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  const CovariateView view{cov, c};

  std::vector<std::vector<double>> ys;
  std::vector<std::string> names;
  for (std::size_t p = 0; p < in.panel.p(); ++p) {
    std::vector<double> y(n);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = in.panel.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
      mean += y[i];
    }
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : y) var += (v - mean) * (v - mean);
    if (var / static_cast<double>(n) <= 1e-12 * std::max(1.0, mean * mean)) continue;
    ys.push_back(std::move(y));
    names.push_back(in.panel.names[p]);
  }

  std::vector<KeyedStat> out;
  GenotypeSource& src = *in.source;
  for (const auto& [start, count] : plan_batches(src.n_markers(), 1024)) {
    RawBatch raw = select_samples(src.read_marker_batch(start, count), in.alignment.genotype_row_index, src.n_samples());
    for (std::size_t m = 0; m < raw.markers.size(); ++m) {
      std::vector<double> g(n);
      double sum = 0;
      std::size_t obs = 0;
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = raw.dosages(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
        if (!is_missing(g[i])) {
          sum += g[i];
          ++obs;
        }
      }
      if (obs == 0) continue;
      const double mean = sum / static_cast<double>(obs);
      double var = 0;
      for (auto& v : g) {
        if (is_missing(v)) v = mean;
        var += (v - mean) * (v - mean);
      }
      if (var / static_cast<double>(n) <= 1e-12) continue;
      for (std::size_t p = 0; p < ys.size(); ++p) {
        OlsResult r;
        try {
          r = ols_single(ys[p], g, view);
        } catch (const Error&) {
          continue;  // genotype collinear with covariates
        }
        out.push_back({raw.markers[m].id, names[p], r.t, r.p});
      }
    }
  }
  return out;
}

}  // namespace panelgwas::oracle
