#include "panelgwas/bounded_queue.hpp"
#include "panelgwas/engine.hpp"
#include "panelgwas/log.hpp"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace panelgwas {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void ScanConfig::validate() const {
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (!(p_threshold > 0.0 && p_threshold <= 1.0)) throw Error("p-threshold must be in (0, 1]");
  if (top_k < 1) throw Error("top-k must be at least 1");
  if (worker_count < 1) throw Error("worker count must be at least 1");
  if (output_path.empty()) throw Error("an output path is required");
  if (phenotype_path.empty()) throw Error("a phenotype table is required");
}

std::vector<std::pair<std::size_t, std::size_t>> plan_batches(std::size_t n_markers, std::size_t batch_size) {
  if (batch_size == 0) throw Error("plan_batches: batch size must be at least 1");
  std::vector<std::pair<std::size_t, std::size_t>> plan;
  plan.reserve((n_markers + batch_size - 1) / batch_size);
  for (std::size_t s = 0; s < n_markers; s += batch_size) plan.emplace_back(s, std::min(batch_size, n_markers - s));
  return plan;
}

ScanInputs load_scan_inputs(const ScanConfig& config) {
  ScanInputs in;
  in.source = open_genotype_source(config.genotypes);

  Table pheno = load_table(config.phenotype_path, config.id_column, config.delimiter);
  if (!config.phenotype_columns.empty()) pheno = pheno.select(config.phenotype_columns);
  if (pheno.cols() == 0) throw Error(config.phenotype_path.string() + ": no phenotype columns");

  std::optional<Table> covar;
  if (!config.covariate_path.empty()) {
    covar = load_table(config.covariate_path, config.id_column, config.delimiter);
    if (!config.covariate_columns.empty()) covar = covar->select(config.covariate_columns);
  }
  std::optional<std::vector<std::string>> keep, remove;
  if (!config.keep_path.empty()) keep = read_id_list(config.keep_path);
  if (!config.remove_path.empty()) remove = read_id_list(config.remove_path);

  in.alignment = align_samples(in.source->sample_ids(), pheno, covar ? &*covar : nullptr, keep ? &*keep : nullptr,
                               remove ? &*remove : nullptr);
  in.panel = build_panel(pheno, in.alignment.phenotype_row_index, config.missing_policy);
  if (covar) {
    in.covariates = build_covariate_matrix(*covar, in.alignment.covariate_row_index);
    in.covariate_names = covar->column_names;
  } else {
    in.covariates.resize(static_cast<Eigen::Index>(in.alignment.n_kept()), 0);
  }
  const auto& log = in.alignment.exclusion_log;
  log::info("samples kept: " + std::to_string(in.alignment.n_kept()) + " (dropped: remove-listed " +
            std::to_string(log.remove_listed) + ", not keep-listed " + std::to_string(log.not_keep_listed) +
            ", no phenotype " + std::to_string(log.not_in_phenotypes) + ", no covariates " +
            std::to_string(log.not_in_covariates) + ")");
  return in;
}

PreparedPanel prepare_panel(const ScanInputs& inputs, const ScanConfig& config) {
  PreparedPanel out;
  out.basis = build_covariate_basis(inputs.covariates, inputs.covariate_names, true);
  const Eigen::MatrixXd& y = inputs.panel.Y;
  const Eigen::VectorXd raw_means = y.colwise().mean().transpose();
  const Eigen::MatrixXd residual = residualize(y, out.basis);
  const auto st = standardize_columns(residual, std::span<const double>(raw_means.data(), raw_means.size()));
  for (std::size_t j = 0; j < st.zero_variance.size(); ++j) {
    if (st.zero_variance[j]) {
      out.skipped_names.push_back(inputs.panel.names[j]);
      log::warn("phenotype '" + inputs.panel.names[j] + "' has zero variance after adjustment; skipped");
    } else {
      out.active_columns.push_back(j);
      out.active_names.push_back(inputs.panel.names[j]);
    }
  }
  out.y_tilde.resize(st.values.rows(), static_cast<Eigen::Index>(out.active_columns.size()));
  for (std::size_t k = 0; k < out.active_columns.size(); ++k)
    out.y_tilde.col(static_cast<Eigen::Index>(k)) = st.values.col(static_cast<Eigen::Index>(out.active_columns[k]));

  const auto n = static_cast<double>(inputs.alignment.n_kept());
  out.df = config.df_mode == DfMode::NMinus2 ? n - 2.0 : n - static_cast<double>(out.basis.rank()) - 1.0;
  if (out.df < 1.0) throw Error("degrees of freedom " + std::to_string(out.df) + " < 1");
  return out;
}

RawBatch select_samples(RawBatch batch, const std::vector<std::size_t>& columns, std::size_t n_source_samples) {
  bool identity = columns.size() == n_source_samples;
  for (std::size_t i = 0; identity && i < columns.size(); ++i) identity = columns[i] == i;
  if (identity) return batch;

  RowMatrixXd d(batch.dosages.rows(), static_cast<Eigen::Index>(columns.size()));
  for (Eigen::Index m = 0; m < d.rows(); ++m) {
    const double* src = batch.dosages.row(m).data();
    double* dst = d.row(m).data();
    std::size_t miss = 0;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      dst[i] = src[columns[i]];
      miss += is_missing(dst[i]) ? 1 : 0;
    }
    batch.missing_count[static_cast<std::size_t>(m)] = miss;
  }
  batch.dosages = std::move(d);
  return batch;
}

ScanSummary run_scan(const ScanConfig& config) {
  config.validate();
  ScanInputs inputs = load_scan_inputs(config);
  return run_scan(config, inputs);
}

ScanSummary run_scan(const ScanConfig& config, ScanInputs& inputs) {
  config.validate();
  const auto t_start = Clock::now();
  ScanSummary summary;
  GenotypeSource& source = *inputs.source;
  summary.markers_total = source.n_markers();
  summary.n_samples = inputs.alignment.n_kept();

  const PreparedPanel prep = prepare_panel(inputs, config);
  summary.df = prep.df;
  summary.phenotypes_scanned = prep.active_names.size();
  summary.phenotypes_skipped = prep.skipped_names.size();
  if (prep.active_names.empty()) throw Error("no phenotype has nonzero variance after covariate adjustment");
  const PackedPhenotypes packed(prep.y_tilde);
  summary.seconds_preprocess = seconds_since(t_start);

  const std::size_t elem = config.precision == Precision::F64 ? 8 : 4;
  if (config.output_mode == OutputMode::Full && !config.allow_full_over_budget) {
    const double projected = static_cast<double>(source.n_markers()) * static_cast<double>(prep.active_names.size()) *
                             static_cast<double>(elem);
    if (projected > static_cast<double>(config.full_byte_budget))
      throw Error("full matrix output would need " + std::to_string(static_cast<std::uint64_t>(projected)) +
                  " bytes, over the budget of " + std::to_string(config.full_byte_budget) +
                  "; raise the budget or allow it explicitly");
  }

  SinkContext ctx{prep.active_names, summary.n_samples, prep.df, source.counts_allele1()};
  std::ofstream text_out;
  std::unique_ptr<ResultSink> sink;
  if (config.output_mode == OutputMode::Full) {
    sink = make_full_sink(config.output_path, ctx, config.precision);
  } else {
    text_out.open(config.output_path, std::ios::trunc);
    if (!text_out) throw Error("output path unwritable: " + config.output_path.string());
    sink = config.output_mode == OutputMode::Threshold ? make_threshold_sink(text_out, ctx, config.p_threshold)
                                                       : make_topk_sink(text_out, ctx, config.top_k);
  }

  const auto plan = plan_batches(source.n_markers(), config.batch_size);
  const std::size_t workers = config.worker_count;
  const std::size_t capacity = config.queue_capacity ? config.queue_capacity : 2 * workers;
  const std::size_t max_in_flight = capacity + workers + 1;
  const bool residualize_g = config.residualize_genotypes;
  const CovariateBasis* basis = &prep.basis;

  BoundedQueue<RawBatch> queue(capacity);
  std::mutex mutex;
  std::condition_variable cv;
  std::map<std::size_t, BatchResult> done;
  std::size_t next_write = 0;
  bool failed = false;
  std::exception_ptr error;
  double t_decode = 0, t_prepare = 0, t_correlate = 0;
  std::vector<std::string> qc_lines;

  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard lock(mutex);
      if (!error) error = e;
      failed = true;
    }
    queue.close();
    cv.notify_all();
  };

  std::thread producer([&] {
    try {
      for (std::size_t seq = 0; seq < plan.size(); ++seq) {
        {
          std::unique_lock lock(mutex);
          cv.wait(lock, [&] { return failed || seq < next_write + max_in_flight; });
          if (failed) break;
        }
        const auto t0 = Clock::now();
        RawBatch raw = source.read_marker_batch(plan[seq].first, plan[seq].second);
        raw = select_samples(std::move(raw), inputs.alignment.genotype_row_index, source.n_samples());
        raw.sequence = seq;
        t_decode += seconds_since(t0);
        if (!queue.push(std::move(raw))) break;
      }
      queue.close();
    } catch (...) {
      fail(std::current_exception());
    }
  });

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      double my_prepare = 0, my_correlate = 0;
      try {
        while (auto raw = queue.pop()) {
          auto t0 = Clock::now();
          StandardizedBatch g = prepare_genotype_batch(*raw, basis, residualize_g, config.precision);
          my_prepare += seconds_since(t0);
          t0 = Clock::now();
          BatchResult res;
          res.sequence = raw->sequence;
          res.R = correlate(g, packed, &res.clamped);
          my_correlate += seconds_since(t0);
          res.markers = std::move(raw->markers);
          res.qc = std::move(g.qc);
          std::lock_guard lock(mutex);
          done.emplace(res.sequence, std::move(res));
          cv.notify_all();
        }
      } catch (...) {
        fail(std::current_exception());
      }
      std::lock_guard lock(mutex);
      t_prepare += my_prepare;
      t_correlate += my_correlate;
    });
  }

  try {
    for (std::size_t seq = 0; seq < plan.size(); ++seq) {
      BatchResult res;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return failed || done.count(seq) > 0; });
        if (failed) break;
        auto it = done.find(seq);
        res = std::move(it->second);
        done.erase(it);
      }
      const auto t0 = Clock::now();
      for (const auto& qc : res.qc) {
        switch (qc.skip) {
          case SkipReason::None: ++summary.markers_scanned; break;
          case SkipReason::Monomorphic: ++summary.markers_skipped_monomorphic; break;
          case SkipReason::AllMissing: ++summary.markers_skipped_all_missing; break;
          case SkipReason::Collinear: ++summary.markers_skipped_collinear; break;
        }
      }
      summary.clamp_count += res.clamped;
      emit_results(*sink, res);
      summary.seconds_emit += seconds_since(t0);
      if (config.write_qc) {
        for (std::size_t i = 0; i < res.qc.size(); ++i)
          if (res.qc[i].skip != SkipReason::None)
            qc_lines.push_back("MARKER\t" + res.markers[i].id + "\t" + to_string(res.qc[i].skip));
      }
      {
        std::lock_guard lock(mutex);
        ++next_write;
      }
      cv.notify_all();
    }
    if (!failed) {
      const auto t0 = Clock::now();
      sink->finish();
      summary.seconds_emit += seconds_since(t0);
    }
  } catch (...) {
    fail(std::current_exception());
  }

  producer.join();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  summary.seconds_decode = t_decode;
  summary.seconds_prepare = t_prepare;
  summary.seconds_correlate = t_correlate;
  summary.records_emitted = sink->records_written();
  summary.p_underflow_count = sink->p_underflow();
  summary.seconds_total = seconds_since(t_start);

  if (config.write_qc) {
    std::ofstream qc(config.output_path.string() + ".qc.tsv", std::ios::trunc);
    qc << "KIND\tNAME\tREASON\n";
    for (const auto& name : prep.skipped_names) qc << "PHENOTYPE\t" << name << "\tZERO_VARIANCE\n";
    for (const auto& line : qc_lines) qc << line << '\n';
    if (!qc) throw Error("cannot write QC sidecar for " + config.output_path.string());
  }
  write_summary_json(config.output_path.string() + ".summary.json", summary);
  return summary;
}

}  // namespace panelgwas
