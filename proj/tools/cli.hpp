#pragma once

#include "panelgwas/engine.hpp"
#include "panelgwas/log.hpp"
#include "panelgwas/oracle.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace panelgwas::cli {

enum class Subcommand { Run, Simulate, Validate, Bench, Convert };

struct UsageError : Error {
  using Error::Error;
};

struct ValidateOptions {
  std::filesystem::path engine_output;  // compare an existing results file instead of running the engine
  double min_pearson = 0.999;
  double max_abs_dt = std::numeric_limits<double>::infinity();
  double min_sign_agreement = 0.0;
};

struct BenchOptions {
  std::size_t repeats = 1;
};

struct Invocation {
  Subcommand subcommand = Subcommand::Run;
  ScanConfig scan;
  bool has_genotypes = false;
  oracle::SimSpec sim;
  ValidateOptions validate;
  BenchOptions bench;
  log::Level log_level = log::Level::Warn;

  // Set when --help was requested; nothing else is meaningful then.
  std::optional<std::string> help_text;
};

// Parses argv (argv[0] is the program name). Throws UsageError naming the offending flag.
// threads_env is the value of PANELGWAS_THREADS, if set.
Invocation parse_invocation(const std::vector<std::string>& args, const char* threads_env = nullptr);

// Runs a parsed invocation; returns the process exit code.
int execute(const Invocation& inv);

}  // namespace panelgwas::cli
