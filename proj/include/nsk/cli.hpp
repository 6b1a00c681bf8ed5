#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nsk/driver.hpp"

namespace nsk {

/// Everything a command needs, read from an INI-style file:
///
///     [section]
///     key = value        ; comments start with ';' or '#'
///
/// Lists are comma separated. Unknown sections or keys are rejected.
struct RunConfig {
  std::string command = "solve";

  // [mesh]
  int n0 = 16;
  int levels = 3;
  int first_level = 0;

  // [params]
  double nu = 0.1;
  double beta = 1e-4;
  double gamma_y = 1.0;
  double gamma_p = 0.0;

  // [linear]
  std::string method = "cg";
  double tol = 1e-8;
  int base = 32;
  std::string cycle = "two_grid";
  int maxit = 1000;
  int m = 2;

  // [newton]
  double grad_tol = 1e-10;
  int max_iter = 10;

  // [bench]
  std::vector<double> bench_nu{0.1};
  std::vector<double> bench_beta{1e-4};
  std::vector<double> bench_gamma_p{0.0};
  bool bench_cg = true;
  bool bench_mgcg = true;

  // [spectral]
  std::vector<int> spectral_levels{1, 2};
  std::string frozen = "target";
  int lanczos_k = 40;
  int power_maxit = 30;
  double power_tol = 1e-4;

  // [mms]
  std::vector<int> mms_n{8, 16, 32};
  double mms_nu = 1.0;

  // [output]
  std::string csv;
  std::string json;
  std::string vtk_dir;

  // [run]
  std::uint64_t seed = 1;
  int threads = 0;

  bool operator==(const RunConfig&) const = default;
};

/// Reads and validates a config file. Throws ConfigError naming the offending
/// key, IoError if the file cannot be read.
RunConfig parse_config(const std::string& path);
/// Same from text; `origin` is used in messages.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
/// Applies one "section.key=value" override. Call validate() once all are applied.
void apply_override(RunConfig& config, const std::string& assignment);
/// Throws ConfigError on invalid values.
void validate(const RunConfig& config);
/// Writes every field so that parse_config_text(write_config(c)) == c.
std::string write_config(const RunConfig& config);

ProblemParams problem_params(const RunConfig& config);
LinearConfig linear_config(const RunConfig& config);
OuterOptions outer_options(const RunConfig& config);
BenchConfig bench_config(const RunConfig& config);
OrderStudyConfig order_config(const RunConfig& config);
MmsConfig mms_config(const RunConfig& config);

/// One CSV row: one Newton step of one arm at one level of one tuple.
struct RecordRow {
  double nu = 0.0;
  double beta = 0.0;
  double gamma_y = 0.0;
  double gamma_p = 0.0;
  std::string method;
  int base = 0;
  int level = 0;
  int newton_iter = 0;
  int lin_iters = 0;
  double grad_inf = 0.0;
  double lin_time_s = 0.0;
  double total_time_s = 0.0;
  std::string status;

  bool operator==(const RecordRow&) const = default;
};

extern const char* const kRecordColumns;

std::vector<RecordRow> record_rows(const std::vector<BenchRecord>& records);
/// CSV with header kRecordColumns, doubles with 17 significant digits.
std::string records_csv(const std::vector<BenchRecord>& records);
std::vector<RecordRow> parse_records_csv(const std::string& text);
/// JSON document with one object per record, 17 significant digits.
std::string records_json(const std::vector<BenchRecord>& records);

enum class RecordFormat { csv, json };
/// Writes records to `path`; throws IoError with the path on failure.
void emit_records(const std::vector<BenchRecord>& records, RecordFormat format, const std::string& path);

/// Legacy-VTK ASCII structured grid over the Q2 nodes with point data
/// velocity, pressure (Q1 interpolated to Q2 nodes) and control.
std::string fields_vtk(const Level& level, const StateSolution& state, const ControlField& control);
void export_fields(const Level& level, const StateSolution& state, const ControlField& control,
                   const std::string& path);

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDiverged = 3, kExitIo = 4 };

/// Runs config.command and prints a human-readable summary to `out`.
/// Returns an ExitCode; configuration and I/O errors are reported on `err`.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace nsk
