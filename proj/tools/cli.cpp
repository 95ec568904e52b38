#include "cli.hpp"

#include "panelgwas/npy.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace panelgwas::cli {

namespace {

struct GenotypeFlags {
  std::string bfile, bed, bim, fam, bgen, sample, dense, dense_ids;
  std::string dense_orientation = "markers-by-samples";
};

struct ScanFlags {
  GenotypeFlags geno;
  std::string pheno, covar, keep, remove, out;
  std::vector<std::string> pheno_names, covar_names;
  std::string id_column = "IID";
  std::string delimiter = "tab";
  std::string missing_policy = "mean-impute";
  std::size_t batch_size = 4096;
  std::string precision = "f32";
  std::string df_mode = "n-2";
  bool residualize_genotypes = false;
  double p_threshold = 1e-4;
  std::size_t top_k = 100;
  bool full = false;
  double full_budget_gib = 16.0;
  bool allow_full_over_budget = false;
  bool write_qc = false;
  std::size_t threads = 1;
  std::size_t queue_capacity = 0;
};

struct Flags {
  ScanFlags scan;
  oracle::SimSpec sim, sim_validate, sim_bench;
  std::string sim_out;
  std::string log_level = "warn";
  std::string dtype = "f64";
  ValidateOptions validate;
  BenchOptions bench;
};

void add_genotype_flags(CLI::App* app, GenotypeFlags& g) {
  auto* bfile = app->add_option("--bfile", g.bfile, "PLINK prefix (<prefix>.bed/.bim/.fam)");
  auto* bed = app->add_option("--bed", g.bed, "PLINK .bed file");
  auto* bim = app->add_option("--bim", g.bim, "PLINK .bim file");
  auto* fam = app->add_option("--fam", g.fam, "PLINK .fam file");
  bed->needs(bim)->needs(fam);
  bim->needs(bed);
  fam->needs(bed);
  auto* bgen = app->add_option("--bgen", g.bgen, "BGEN v1.2 file (layout 2, zlib, 8/16-bit probabilities)");
  auto* sample = app->add_option("--sample", g.sample, "sample-id list overriding the BGEN sample block");
  sample->needs(bgen);
  auto* dense = app->add_option("--dense", g.dense, "dense .npy dosage matrix");
  auto* dense_ids = app->add_option("--dense-ids", g.dense_ids, "sample-id list for --dense, one per line");
  app->add_option("--dense-orientation", g.dense_orientation, "layout of --dense")
      ->check(CLI::IsMember({"markers-by-samples", "samples-by-markers"}));
  dense->needs(dense_ids);
  dense_ids->needs(dense);
  bfile->excludes(bed)->excludes(bgen)->excludes(dense);
  bed->excludes(bgen)->excludes(dense);
  bgen->excludes(dense);
}

void add_scan_flags(CLI::App* app, ScanFlags& s, bool output_modes) {
  add_genotype_flags(app, s.geno);
  app->add_option("--pheno", s.pheno, "phenotype table (header row, ID column)");
  app->add_option("--covar", s.covar, "covariate table (header row, ID column)");
  app->add_option("--pheno-name", s.pheno_names, "phenotype columns to use (default: all)");
  app->add_option("--covar-name", s.covar_names, "covariate columns to use (default: all)");
  app->add_option("--keep", s.keep, "keep only these sample ids");
  app->add_option("--remove", s.remove, "drop these sample ids (wins over --keep)");
  app->add_option("--id-column", s.id_column, "sample-id column name in tables");
  app->add_option("--delimiter", s.delimiter, "table delimiter: tab, comma, space, or one character");
  app->add_option("--missing-policy", s.missing_policy, "missing phenotype values")
      ->check(CLI::IsMember({"mean-impute", "fail"}));
  app->add_option("--batch-size", s.batch_size, "markers per batch")->check(CLI::PositiveNumber);
  app->add_option("--precision", s.precision, "genotype batch storage (accumulation is always f64)")
      ->check(CLI::IsMember({"f32", "f64"}));
  app->add_option("--df-mode", s.df_mode, "degrees of freedom: n-2, or adjusted (N - rank(covariates) - 1)")
      ->check(CLI::IsMember({"n-2", "adjusted"}));
  app->add_flag("--residualize-genotypes", s.residualize_genotypes, "project covariates out of genotypes too");
  app->add_option("--threads", s.threads, "worker threads (overrides PANELGWAS_THREADS)")
      ->check(CLI::PositiveNumber);
  app->add_option("--queue-capacity", s.queue_capacity, "decoded batches buffered ahead (0: 2 x threads)");
  if (output_modes) {
    auto* pt = app->add_option("--p-threshold", s.p_threshold, "emit records with p <= threshold")
                   ->check(CLI::Range(0.0, 1.0));
    auto* top_k = app->add_option("--top-k", s.top_k, "emit the k smallest p per phenotype")
                      ->check(CLI::PositiveNumber);
    auto* full = app->add_flag("--full", s.full, "write the dense marker x phenotype t matrix");
    top_k->excludes(full);
    pt->excludes(top_k)->excludes(full);
    app->add_option("--full-budget-gib", s.full_budget_gib, "refuse --full output larger than this");
    app->add_flag("--allow-full-over-budget", s.allow_full_over_budget, "override the --full size check");
    app->add_flag("--write-qc", s.write_qc, "write <out>.qc.tsv listing skipped markers and phenotypes");
  }
}

std::vector<CLI::Option*> add_sim_flags(CLI::App* app, oracle::SimSpec& s) {
  return {
      app->add_option("--seed", s.seed, "random seed"),
      app->add_option("--n-samples", s.n_samples, "samples"),
      app->add_option("--n-markers", s.n_markers, "markers"),
      app->add_option("--n-phenotypes", s.n_phenotypes, "phenotypes"),
      app->add_option("--n-covariates", s.n_covariates, "covariates"),
      app->add_option("--causal-fraction", s.causal_fraction, "fraction of markers causal for each phenotype"),
      app->add_option("--effect-sd", s.effect_sd, "causal effect magnitude"),
      app->add_option("--noise-sd", s.noise_sd, "phenotype noise sd"),
      app->add_option("--covariate-effect-sd", s.covariate_effect_sd, "covariate effect sd"),
      app->add_option("--geno-missing", s.genotype_missing_rate, "genotype missing rate"),
      app->add_option("--pheno-missing", s.phenotype_missing_rate, "phenotype missing rate"),
      app->add_option("--af-min", s.af_min, "minimum allele frequency"),
      app->add_option("--af-max", s.af_max, "maximum allele frequency"),
  };
}

char parse_delimiter(const std::string& d) {
  if (d == "tab" || d == "\\t") return '\t';
  if (d == "comma") return ',';
  if (d == "space") return ' ';
  if (d.size() == 1) return d[0];
  throw UsageError("--delimiter: expected tab, comma, space, or a single character, got '" + d + "'");
}

std::size_t parse_threads_env(const char* env) {
  std::size_t v = 0;
  const std::string s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0)
    throw UsageError("PANELGWAS_THREADS: expected a positive integer, got '" + s + "'");
  return v;
}

bool resolve_genotypes(const GenotypeFlags& g, GenotypeSpec& spec) {
  if (!g.bfile.empty()) {
    spec = GenotypeSpec::plink_prefix(g.bfile);
  } else if (!g.bed.empty()) {
    spec.format = GenotypeFormat::PlinkBed;
    spec.bed = g.bed;
    spec.bim = g.bim;
    spec.fam = g.fam;
  } else if (!g.bgen.empty()) {
    spec.format = GenotypeFormat::Bgen;
    spec.bgen = g.bgen;
    spec.sample_ids = g.sample;
  } else if (!g.dense.empty()) {
    spec.format = GenotypeFormat::Dense;
    spec.dense = g.dense;
    spec.sample_ids = g.dense_ids;
    spec.orientation = g.dense_orientation == "samples-by-markers" ? DenseOrientation::SamplesByMarkers
                                                                   : DenseOrientation::MarkersBySamples;
  } else {
    return false;
  }
  return true;
}

// The flag storage is shared between subcommands; sub is the one that was parsed.
void fill_scan(const ScanFlags& s, const CLI::App* sub, Invocation& inv, const char* threads_env) {
  auto given = [sub](const char* name) {
    const auto* o = sub->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  ScanConfig& c = inv.scan;
  inv.has_genotypes = resolve_genotypes(s.geno, c.genotypes);
  c.phenotype_path = s.pheno;
  c.covariate_path = s.covar;
  c.keep_path = s.keep;
  c.remove_path = s.remove;
  c.phenotype_columns = s.pheno_names;
  c.covariate_columns = s.covar_names;
  c.id_column = s.id_column;
  c.delimiter = parse_delimiter(s.delimiter);
  c.missing_policy = s.missing_policy == "fail" ? MissingPolicy::Fail : MissingPolicy::MeanImpute;
  c.batch_size = s.batch_size;
  c.precision = s.precision == "f64" ? Precision::F64 : Precision::F32StoreF64Acc;
  c.df_mode = s.df_mode == "adjusted" ? DfMode::Adjusted : DfMode::NMinus2;
  c.residualize_genotypes = s.residualize_genotypes;
  c.p_threshold = s.p_threshold;
  c.top_k = s.top_k;
  if (s.full)
    c.output_mode = OutputMode::Full;
  else if (given("--top-k"))
    c.output_mode = OutputMode::TopK;
  else
    c.output_mode = OutputMode::Threshold;
  if (!(s.full_budget_gib > 0)) throw UsageError("--full-budget-gib: must be positive");
  c.full_byte_budget = static_cast<std::uint64_t>(s.full_budget_gib * static_cast<double>(1ull << 30));
  c.allow_full_over_budget = s.allow_full_over_budget;
  c.write_qc = s.write_qc;
  c.worker_count = s.threads;
  if (!given("--threads") && threads_env) c.worker_count = parse_threads_env(threads_env);
  c.queue_capacity = s.queue_capacity;
  c.output_path = s.out;
}

log::Level parse_level(const std::string& s) {
  static const std::map<std::string, log::Level> m = {
      {"quiet", log::Level::Quiet}, {"warn", log::Level::Warn}, {"info", log::Level::Info}, {"debug", log::Level::Debug}};
  return m.at(s);
}

// Configuration checks after parsing are usage errors too.
template <typename F>
void as_usage(F&& f) {
  try {
    f();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

bool any_used(const std::vector<CLI::Option*>& opts) {
  for (auto* o : opts)
    if (o->count() > 0) return true;
  return false;
}

}  // namespace

Invocation parse_invocation(const std::vector<std::string>& args, const char* threads_env) {
  CLI::App app{"panelgwas: linear association scans for large phenotype panels"};
  app.name(args.empty() ? "panelgwas" : std::filesystem::path(args[0]).filename().string());
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.allow_extras(false);

  Flags f;
  app.add_option("--log-level", f.log_level, "diagnostic verbosity on stderr")
      ->check(CLI::IsMember({"quiet", "warn", "info", "debug"}));

  auto* run = app.add_subcommand("run", "scan a genotype dataset against a phenotype panel");
  add_scan_flags(run, f.scan, true);
  run->add_option("--out", f.scan.out, "output path; sidecars use it as a prefix (required)");

  auto* sim = app.add_subcommand("simulate", "write a simulated PLINK cohort with phenotypes and covariates");
  add_sim_flags(sim, f.sim);
  sim->add_option("--out", f.sim_out, "output prefix (required)");

  auto* val = app.add_subcommand("validate", "compare the engine against the least-squares oracle");
  add_scan_flags(val, f.scan, false);
  f.sim_validate.n_samples = 2000;
  f.sim_validate.n_markers = 2000;
  f.sim_validate.n_phenotypes = 32;
  f.sim_validate.n_covariates = 3;
  const auto val_sim_opts = add_sim_flags(val, f.sim_validate);
  val->add_option("--out", f.scan.out, "prefix for engine results and the concordance report (default: temporary)");
  val->add_option("--engine-output", f.validate.engine_output, "existing results file to check instead of running");
  val->add_option("--min-pearson", f.validate.min_pearson, "minimum Pearson r of -log10 p");
  val->add_option("--max-abs-dt", f.validate.max_abs_dt, "maximum |t_engine - t_oracle|");
  val->add_option("--min-sign-agreement", f.validate.min_sign_agreement, "minimum fraction of matching t signs");

  auto* bench = app.add_subcommand("bench", "time a scan and report throughput");
  add_scan_flags(bench, f.scan, true);
  f.sim_bench.n_samples = 2000;
  f.sim_bench.n_markers = 20000;
  f.sim_bench.n_phenotypes = 128;
  f.sim_bench.n_covariates = 3;
  const auto bench_sim_opts = add_sim_flags(bench, f.sim_bench);
  bench->add_option("--out", f.scan.out, "output path (default: temporary)");
  bench->add_option("--repeats", f.bench.repeats, "timed repetitions; the fastest is reported")
      ->check(CLI::PositiveNumber);

  auto* conv = app.add_subcommand("convert", "convert genotypes to a dense .npy matrix with sidecars");
  add_genotype_flags(conv, f.scan.geno);
  conv->add_option("--out", f.scan.out, "output prefix (required)");
  conv->add_option("--dtype", f.dtype, "element type")->check(CLI::IsMember({"f32", "f64"}));

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());

  Invocation inv;
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    inv.help_text = os.str();
    return inv;
  } catch (const CLI::CallForAllHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    inv.help_text = os.str();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  inv.log_level = parse_level(f.log_level);

  if (run->parsed()) {
    inv.subcommand = Subcommand::Run;
    if (f.scan.out.empty()) throw UsageError("run: --out is required");
    fill_scan(f.scan, run, inv, threads_env);
    if (!inv.has_genotypes) throw UsageError("run: a genotype input is required (--bfile, --bed/--bim/--fam, --bgen or --dense)");
    if (f.scan.pheno.empty()) throw UsageError("run: --pheno is required");
    as_usage([&] { inv.scan.validate(); });
  } else if (sim->parsed()) {
    inv.subcommand = Subcommand::Simulate;
    if (f.sim_out.empty()) throw UsageError("simulate: --out is required");
    inv.sim = f.sim;
    inv.scan.output_path = f.sim_out;
    as_usage([&] { inv.sim.validate(); });
  } else if (val->parsed() || bench->parsed()) {
    const bool is_val = val->parsed();
    inv.subcommand = is_val ? Subcommand::Validate : Subcommand::Bench;
    fill_scan(f.scan, is_val ? val : bench, inv, threads_env);
    const std::string name = is_val ? "validate" : "bench";
    if (inv.has_genotypes) {
      if (any_used(is_val ? val_sim_opts : bench_sim_opts)) throw UsageError(name + ": simulation flags cannot be combined with a genotype input");
      if (f.scan.pheno.empty()) throw UsageError(name + ": --pheno is required with a genotype input");
    } else {
      if (!f.scan.pheno.empty() || !f.scan.covar.empty())
        throw UsageError(name + ": --pheno/--covar need a genotype input");
      inv.sim = is_val ? f.sim_validate : f.sim_bench;
      as_usage([&] { inv.sim.validate(); });
    }
    if (is_val) {
      inv.validate = f.validate;
      if (!inv.validate.engine_output.empty() && !inv.has_genotypes)
        throw UsageError("validate: --engine-output needs the genotype and phenotype inputs it was produced from");
    } else {
      inv.bench = f.bench;
    }
  } else {
    inv.subcommand = Subcommand::Convert;
    if (f.scan.out.empty()) throw UsageError("convert: --out is required");
    inv.has_genotypes = resolve_genotypes(f.scan.geno, inv.scan.genotypes);
    if (!inv.has_genotypes) throw UsageError("convert: a genotype input is required");
    inv.scan.output_path = f.scan.out;
    inv.scan.precision = f.dtype == "f32" ? Precision::F32StoreF64Acc : Precision::F64;
  }
  return inv;
}

namespace {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("panelgwas-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

void print_kv(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

// Fills the scan inputs from a freshly simulated cohort under dir.
void use_simulated(ScanConfig& c, const oracle::SimSpec& spec, const std::filesystem::path& dir) {
  const auto cohort = oracle::simulate_cohort(spec, dir / "sim");
  c.genotypes = GenotypeSpec::plink_prefix(cohort.prefix.string());
  c.phenotype_path = cohort.phenotype_path;
  c.covariate_path = cohort.covariate_path;
  log::info("simulated N=" + std::to_string(spec.n_samples) + " M=" + std::to_string(spec.n_markers) +
            " P=" + std::to_string(spec.n_phenotypes) + " c=" + std::to_string(spec.n_covariates));
}

int run_validate(const Invocation& inv) {
  TempDir tmp;
  ScanConfig c = inv.scan;
  if (!inv.has_genotypes) use_simulated(c, inv.sim, tmp.path());
  const bool keep_outputs = !c.output_path.empty();
  const std::filesystem::path prefix = keep_outputs ? c.output_path : tmp.path() / "engine";

  std::vector<AssocRecord> engine;
  if (!inv.validate.engine_output.empty()) {
    engine = read_results(inv.validate.engine_output);
  } else {
    c.output_mode = OutputMode::Threshold;
    c.p_threshold = 1.0;
    c.output_path = prefix.string() + ".assoc.tsv";
    const auto summary = run_scan(c);
    print_kv(std::cerr, summary.key_values());
    engine = read_results(c.output_path);
  }
  const auto report = oracle::concordance_report(oracle::keyed(engine), oracle::oracle_scan(c));
  std::cout << report.to_text();
  if (keep_outputs) {
    std::ofstream txt(prefix.string() + ".concordance.txt", std::ios::trunc), kv(prefix.string() + ".concordance.kv");
    txt << report.to_text();
    print_kv(kv, report.key_values());
    if (!txt || !kv) throw Error("cannot write concordance report under " + prefix.string());
  }

  int rc = 0;
  if (!(report.pearson_neglog10p >= inv.validate.min_pearson)) {
    std::cerr << "FAIL: pearson r " << format_double(report.pearson_neglog10p) << " < "
              << format_double(inv.validate.min_pearson) << '\n';
    rc = 1;
  }
  if (!(report.max_abs_dt <= inv.validate.max_abs_dt)) {
    std::cerr << "FAIL: max |delta t| " << format_double(report.max_abs_dt) << " > "
              << format_double(inv.validate.max_abs_dt) << '\n';
    rc = 1;
  }
  if (!(report.sign_agreement >= inv.validate.min_sign_agreement)) {
    std::cerr << "FAIL: sign agreement " << format_double(report.sign_agreement) << " < "
              << format_double(inv.validate.min_sign_agreement) << '\n';
    rc = 1;
  }
  return rc;
}

int run_bench(const Invocation& inv) {
  TempDir tmp;
  ScanConfig c = inv.scan;
  if (!inv.has_genotypes) use_simulated(c, inv.sim, tmp.path());
  if (c.output_path.empty()) c.output_path = tmp.path() / "bench.out";
  ScanSummary best;
  for (std::size_t r = 0; r < inv.bench.repeats; ++r) {
    const auto s = run_scan(c);
    if (r == 0 || s.seconds_total < best.seconds_total) best = s;
  }
  const double tests = static_cast<double>(best.markers_scanned) * static_cast<double>(best.phenotypes_scanned);
  std::cout << "workers=" << c.worker_count << '\n'
            << "batch_size=" << c.batch_size << '\n'
            << "precision=" << (c.precision == Precision::F64 ? "f64" : "f32") << '\n'
            << "repeats=" << inv.bench.repeats << '\n';
  print_kv(std::cout, best.key_values());
  std::cout << "tests=" << format_double(tests) << '\n'
            << "tests_per_second=" << format_double(best.seconds_total > 0 ? tests / best.seconds_total : 0.0) << '\n';
  return 0;
}

int run_convert(const Invocation& inv) {
  auto src = open_genotype_source(inv.scan.genotypes);
  const std::size_t n = src->n_samples(), m = src->n_markers();
  std::vector<double> values;
  values.reserve(n * m);
  const std::string prefix = inv.scan.output_path.string();
  std::ofstream markers(prefix + ".markers.tsv", std::ios::trunc);
  markers << "CHR\tID\tPOS\tCOUNTED\tOTHER\n";
  for (const auto& [start, count] : plan_batches(m, 4096)) {
    RawBatch b = src->read_marker_batch(start, count);
    values.insert(values.end(), b.dosages.data(), b.dosages.data() + b.dosages.size());
    for (const auto& r : b.markers) {
      const auto& counted = b.counts_allele1 ? r.allele1 : r.allele2;
      const auto& other = b.counts_allele1 ? r.allele2 : r.allele1;
      markers << r.chrom << '\t' << r.id << '\t' << r.pos << '\t' << counted << '\t' << other << '\n';
    }
  }
  npy::write(prefix + ".npy", values, m, n, inv.scan.precision == Precision::F64 ? 8 : 4);
  std::ofstream ids(prefix + ".ids.txt", std::ios::trunc);
  for (const auto& id : src->sample_ids()) ids << id << '\n';
  if (!markers || !ids) throw Error("cannot write conversion sidecars under " + prefix);
  std::cerr << "markers=" << m << "\nsamples=" << n << '\n';
  return 0;
}

}  // namespace

int execute(const Invocation& inv) {
  if (inv.help_text) {
    std::cout << *inv.help_text;
    return 0;
  }
  log::set_level(inv.log_level);
  switch (inv.subcommand) {
    case Subcommand::Run:
      print_kv(std::cerr, run_scan(inv.scan).key_values());
      return 0;
    case Subcommand::Simulate: {
      const auto c = oracle::simulate_cohort(inv.sim, inv.scan.output_path);
      std::cerr << "genotypes=" << c.prefix.string() << ".bed\nphenotypes=" << c.phenotype_path.string()
                << "\ncovariates=" << c.covariate_path.string() << "\ntruth=" << c.truth_path.string() << '\n';
      return 0;
    }
    case Subcommand::Validate:
      return run_validate(inv);
    case Subcommand::Bench:
      return run_bench(inv);
    case Subcommand::Convert:
      return run_convert(inv);
  }
  return 1;
}

}  // namespace panelgwas::cli
