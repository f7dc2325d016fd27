#pragma once

// Experiment runner behind the `saddle` command line tool.
//
// Configuration is a JSON document (schema_version 1) describing a list of
// scenarios; see README.md for the grammar. Outputs per run:
//   <output_dir>/<scenario id>.csv  trajectory rows
//   <output_dir>/certificates.json  bound certificates, sorted by scenario then N
//   <output_dir>/summary.csv        one line per scenario

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "saddle/analysis.hpp"
#include "saddle/problems.hpp"
#include "saddle/solvers.hpp"

namespace saddle::experiment {

inline constexpr int kConfigSchemaVersion = 1;

/// Exit codes of every verb.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Config could not be parsed or validated. The message names the line (for
/// syntax errors) or the JSON path of the offending field.
class ConfigParseError : public Error {
 public:
  using Error::Error;
};

struct Scenario {
  std::string id;
  std::shared_ptr<const QuadraticSaddleProblem> problem;
  SolverKind solver = SolverKind::ogda;
  StepsizeRule rule;
  InnerSolver inner;
  JointPoint z0;
  std::int64_t iterations = 1;
  bool certify = true;
  std::vector<std::int64_t> schedule;  // empty: 1, 2, 4, ..., N
};

struct ExperimentConfig {
  std::filesystem::path output_dir;
  std::vector<Scenario> scenarios;
};

/// Parses and validates; relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& file);

struct RunSettings {
  unsigned threads = 1;
};

/// Threads from SADDLE_THREADS, defaulting to the hardware concurrency.
unsigned threads_from_environment();

/// Runs every scenario and writes the outputs. Returns 0 iff every certificate
/// passes, 1 if a run failed or a certificate did not pass.
int run_experiments(const ExperimentConfig& config, const RunSettings& settings, std::ostream& log);

/// Cross-checks each scenario against the naive recurrence replay.
/// Returns 0 iff every coordinate agrees within `tolerance`.
int replay_experiments(const ExperimentConfig& config, std::ostream& log, double tolerance = 1e-12);

/// Max per-coordinate deviation between solvers::run and the replay oracle.
double replay_deviation(const Scenario& scenario);

std::string format_double(double v);  // 17 significant digits

struct VerifyOptions {
  int problems = 6;
  std::uint64_t base_seed = 20190101;
  std::int64_t iterations = 2000;
  int operator_pairs = 1000;
  bool inject_ogda_stepsize_fault = false;  // runs OGDA at eta = 2/L
};

/// Full property battery over a seeded problem set. Prints a pass/fail matrix.
/// Returns 0 when everything passes, 1 on any failure, 2 on an empty set.
int verify_suite(const VerifyOptions& options, std::ostream& out);

}  // namespace saddle::experiment
