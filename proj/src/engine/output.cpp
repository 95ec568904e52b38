#include "panelgwas/engine.hpp"

#include "panelgwas/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace panelgwas {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

std::string format_record(const AssocRecord& r) {
  std::string s;
  s.reserve(128);
  auto field = [&](const std::string& v) {
    s += v;
    s += '\t';
  };
  field(r.chrom);
  field(r.id);
  field(std::to_string(r.pos));
  field(r.counted_allele);
  field(r.other_allele);
  field(format_double(r.allele_frequency));
  field(std::to_string(r.missing_count));
  field(std::to_string(r.n));
  field(format_double(r.df));
  field(format_double(r.r));
  field(format_double(r.t));
  field(format_double(r.p));
  s += r.phenotype;
  return s;
}

namespace {

AssocRecord make_record(const SinkContext& ctx, const MarkerRecord& m, const MarkerQc& qc, std::size_t pheno,
                        double r, double t, double p) {
  AssocRecord rec;
  rec.chrom = m.chrom;
  rec.id = m.id;
  rec.pos = m.pos;
  rec.counted_allele = ctx.counts_allele1 ? m.allele1 : m.allele2;
  rec.other_allele = ctx.counts_allele1 ? m.allele2 : m.allele1;
  rec.allele_frequency = qc.allele_frequency;
  rec.missing_count = qc.missing_count;
  rec.phenotype = ctx.phenotype_names[pheno];
  rec.n = ctx.n;
  rec.r = r;
  rec.t = t;
  rec.p = p;
  rec.df = ctx.df;
  rec.source_index = m.source_index;
  return rec;
}

class ThresholdSink final : public ResultSink {
 public:
  ThresholdSink(std::ostream& out, SinkContext ctx, double p_threshold)
      : out_(out), ctx_(std::move(ctx)), threshold_(p_threshold) {
    // Candidates are screened on |r| with a small margin, then confirmed on p itself.
    screen_ = critical_abs_r(p_threshold, ctx_.df) * (1.0 - 1e-9);
    out_ << kTsvHeader << '\n';
  }

  void consume(const BatchResult& b) override {
    const auto p_count = static_cast<std::size_t>(b.R.cols());
    for (std::size_t i = 0; i < b.markers.size(); ++i) {
      if (b.qc[i].skip != SkipReason::None) continue;
      const double* row = b.R.data() + i * p_count;
      for (std::size_t j = 0; j < p_count; ++j) {
        const double r = row[j];
        if (std::fabs(r) < screen_) continue;
        const double t = t_from_r(r, ctx_.df);
        std::size_t uf = 0;
        const double p = p_from_t(t, ctx_.df, &uf);
        if (p > threshold_) continue;
        underflow_ += uf;
        out_ << format_record(make_record(ctx_, b.markers[i], b.qc[i], j, r, t, p)) << '\n';
        ++records_;
      }
    }
    if (!out_) throw Error("write failure on results output");
  }

  void finish() override {
    out_.flush();
    if (!out_) throw Error("write failure on results output");
  }

 private:
  std::ostream& out_;
  SinkContext ctx_;
  double threshold_;
  double screen_ = 0.0;
};

class TopKSink final : public ResultSink {
 public:
  TopKSink(std::ostream& out, SinkContext ctx, std::size_t k)
      : out_(out), ctx_(std::move(ctx)), k_(k), heaps_(ctx_.phenotype_names.size()) {}

  void consume(const BatchResult& b) override {
    const auto p_count = static_cast<std::size_t>(b.R.cols());
    for (std::size_t i = 0; i < b.markers.size(); ++i) {
      if (b.qc[i].skip != SkipReason::None) continue;
      const double* row = b.R.data() + i * p_count;
      for (std::size_t j = 0; j < p_count; ++j) {
        auto& heap = heaps_[j];
        const double r = row[j];
        // Markers arrive in increasing source order, so a newcomer must beat the current
        // worst on p strictly; p is non-increasing in |r|.
        if (heap.size() == k_ && std::fabs(r) <= std::fabs(heap.front().r)) continue;
        const double t = t_from_r(r, ctx_.df);
        const double p = p_from_t(t, ctx_.df);
        if (heap.size() == k_) {
          if (!(p < heap.front().p)) continue;
          std::pop_heap(heap.begin(), heap.end(), worse_last);
          heap.pop_back();
        }
        heap.push_back(make_record(ctx_, b.markers[i], b.qc[i], j, r, t, p));
        std::push_heap(heap.begin(), heap.end(), worse_last);
      }
    }
  }

  void finish() override {
    out_ << kTsvHeader << '\n';
    for (auto& heap : heaps_) {
      std::sort(heap.begin(), heap.end(), worse_last);
      for (const auto& rec : heap) {
        if (rec.p <= kPFloor) ++underflow_;
        out_ << format_record(rec) << '\n';
        ++records_;
      }
      heap.clear();
    }
    out_.flush();
    if (!out_) throw Error("write failure on results output");
  }

 private:
  // Strict weak order: smaller p first, then smaller source index.
  static bool worse_last(const AssocRecord& a, const AssocRecord& b) {
    if (a.p != b.p) return a.p < b.p;
    return a.source_index < b.source_index;
  }

  std::ostream& out_;
  SinkContext ctx_;
  std::size_t k_;
  std::vector<std::vector<AssocRecord>> heaps_;
};

constexpr char kFullMagic[16] = {'P', 'A', 'N', 'E', 'L', 'G', 'W', 'A', 'S', '-', 'F', 'U', 'L', 'L', '\0', '\0'};
constexpr std::uint32_t kFullVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(b.data(), b.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw FormatError("full matrix header truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<T>(v);
}

class FullSink final : public ResultSink {
 public:
  FullSink(const std::filesystem::path& path, SinkContext ctx, Precision precision)
      : path_(path), ctx_(std::move(ctx)), element_size_(precision == Precision::F64 ? 8 : 4) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write " + path.string());
    markers_.open(path.string() + ".markers.tsv", std::ios::trunc);
    if (!markers_) throw Error("cannot write " + path.string() + ".markers.tsv");
    markers_ << "CHR\tID\tPOS\tA1\tA2\tAF\tN_MISS\n";
    write_header(0);
  }

  void consume(const BatchResult& b) override {
    const auto p_count = static_cast<std::size_t>(b.R.cols());
    std::vector<char> row_bytes(p_count * element_size_);
    for (std::size_t i = 0; i < b.markers.size(); ++i) {
      if (b.qc[i].skip != SkipReason::None) continue;
      const double* row = b.R.data() + i * p_count;
      for (std::size_t j = 0; j < p_count; ++j) {
        const double t = t_from_r(row[j], ctx_.df);
        if (element_size_ == 8) {
          std::memcpy(row_bytes.data() + 8 * j, &t, 8);
        } else {
          const auto f = static_cast<float>(t);
          std::memcpy(row_bytes.data() + 4 * j, &f, 4);
        }
      }
      out_.write(row_bytes.data(), static_cast<std::streamsize>(row_bytes.size()));
      const auto& m = b.markers[i];
      markers_ << m.chrom << '\t' << m.id << '\t' << m.pos << '\t' << (ctx_.counts_allele1 ? m.allele1 : m.allele2)
               << '\t' << (ctx_.counts_allele1 ? m.allele2 : m.allele1) << '\t'
               << format_double(b.qc[i].allele_frequency) << '\t' << b.qc[i].missing_count << '\n';
      ++rows_;
      records_ += p_count;
    }
    if (!out_ || !markers_) throw Error("write failure on full-matrix output");
  }

  void finish() override {
    out_.seekp(0);
    write_header(rows_);
    out_.close();
    markers_.close();
    std::ofstream names(path_.string() + ".phenotypes.txt", std::ios::trunc);
    for (const auto& n : ctx_.phenotype_names) names << n << '\n';
    if (!out_ || !markers_ || !names) throw Error("write failure on full-matrix output");
  }

 private:
  void write_header(std::uint64_t rows) {
    out_.write(kFullMagic, sizeof(kFullMagic));
    put_le<std::uint32_t>(out_, kFullVersion);
    put_le<std::uint64_t>(out_, rows);
    put_le<std::uint64_t>(out_, ctx_.phenotype_names.size());
    put_le<std::uint32_t>(out_, element_size_);
  }

  std::filesystem::path path_;
  SinkContext ctx_;
  std::uint32_t element_size_;
  std::ofstream out_, markers_;
  std::uint64_t rows_ = 0;
};

}  // namespace

std::unique_ptr<ResultSink> make_threshold_sink(std::ostream& out, SinkContext ctx, double p_threshold) {
  return std::make_unique<ThresholdSink>(out, std::move(ctx), p_threshold);
}

std::unique_ptr<ResultSink> make_topk_sink(std::ostream& out, SinkContext ctx, std::size_t k) {
  if (k == 0) throw Error("top-k must be at least 1");
  return std::make_unique<TopKSink>(out, std::move(ctx), k);
}

std::unique_ptr<ResultSink> make_full_sink(const std::filesystem::path& out, SinkContext ctx, Precision precision) {
  return std::make_unique<FullSink>(out, std::move(ctx), precision);
}

std::size_t emit_results(ResultSink& sink, const BatchResult& batch) {
  if (batch.qc.size() != batch.markers.size() || static_cast<std::size_t>(batch.R.rows()) != batch.markers.size())
    throw Error("emit_results: statistics do not match the batch's markers");
  const std::size_t before = sink.records_written();
  sink.consume(batch);
  return sink.records_written() - before;
}

std::vector<AssocRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTsvHeader) throw FormatError(path.string() + ": missing results header");
  std::vector<AssocRecord> out;
  std::size_t lineno = 1;
  auto num = [&](const std::string& s, double& v) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1)
      f.push_back(line.substr(start, pos - start));
    f.push_back(line.substr(start));
    if (f.size() != 13)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 13 columns");
    AssocRecord r;
    r.chrom = f[0];
    r.id = f[1];
    double tmp = 0;
    num(f[2], tmp);
    r.pos = static_cast<std::uint64_t>(tmp);
    r.counted_allele = f[3];
    r.other_allele = f[4];
    num(f[5], r.allele_frequency);
    num(f[6], tmp);
    r.missing_count = static_cast<std::size_t>(tmp);
    num(f[7], tmp);
    r.n = static_cast<std::size_t>(tmp);
    num(f[8], r.df);
    num(f[9], r.r);
    num(f[10], r.t);
    num(f[11], r.p);
    r.phenotype = f[12];
    out.push_back(std::move(r));
  }
  return out;
}

FullMatrix read_full_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[16];
  if (!in.read(magic, 16) || std::memcmp(magic, kFullMagic, 16) != 0)
    throw FormatError(path.string() + ": bad full-matrix magic");
  FullMatrix m;
  m.version = get_le<std::uint32_t>(in);
  m.rows = get_le<std::uint64_t>(in);
  m.cols = get_le<std::uint64_t>(in);
  m.element_size = get_le<std::uint32_t>(in);
  if (m.element_size != 4 && m.element_size != 8) throw FormatError(path.string() + ": bad element type code");
  m.values.resize(m.rows * m.cols);
  for (auto& v : m.values) {
    if (m.element_size == 8) {
      if (!in.read(reinterpret_cast<char*>(&v), 8)) throw FormatError(path.string() + ": payload truncated");
    } else {
      float f;
      if (!in.read(reinterpret_cast<char*>(&f), 4)) throw FormatError(path.string() + ": payload truncated");
      v = f;
    }
  }
  return m;
}

std::vector<std::pair<std::string, std::string>> ScanSummary::key_values() const {
  auto u = [](std::size_t v) { return std::to_string(v); };
  return {
      {"n_samples", u(n_samples)},
      {"df", format_double(df)},
      {"markers_total", u(markers_total)},
      {"markers_scanned", u(markers_scanned)},
      {"markers_skipped_monomorphic", u(markers_skipped_monomorphic)},
      {"markers_skipped_all_missing", u(markers_skipped_all_missing)},
      {"markers_skipped_collinear", u(markers_skipped_collinear)},
      {"phenotypes_scanned", u(phenotypes_scanned)},
      {"phenotypes_skipped", u(phenotypes_skipped)},
      {"records_emitted", u(records_emitted)},
      {"clamp_count", u(clamp_count)},
      {"p_underflow_count", u(p_underflow_count)},
      {"seconds_preprocess", format_double(seconds_preprocess)},
      {"seconds_decode", format_double(seconds_decode)},
      {"seconds_prepare", format_double(seconds_prepare)},
      {"seconds_correlate", format_double(seconds_correlate)},
      {"seconds_emit", format_double(seconds_emit)},
      {"seconds_total", format_double(seconds_total)},
  };
}

void write_summary_json(const std::filesystem::path& path, const ScanSummary& summary) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : summary.key_values()) {
    if (k == "df" || k.rfind("seconds_", 0) == 0)
      j[k] = std::stod(v);
    else
      j[k] = std::stoull(v);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace panelgwas
